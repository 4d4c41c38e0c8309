"""Catalog of jump laws in the domain of attraction of stable laws.

Every law exposes exact sampling plus the three truncated functionals the
normalization and inequality code needs:

* ``V(x) = E(X^2; |X| <= x)``  (truncated second moment)
* ``P(|X| > x)``               (two-sided tail)
* ``E(X; |X| <= x)``           (truncated mean)

Closed forms are used where they exist; otherwise the value is obtained by
adaptive quadrature of the density.  Sampling always happens through a
single generator call per request so that a block of draws is a prefix of
any larger block drawn from the same generator state.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, QuadratureError

QUAD_ABS_TOL = 1e-10


# --------------------------------------------------------------------------
# stable variates
# --------------------------------------------------------------------------

def stable_from_uniforms(u, alpha, skew=0.0, scale=1.0):
    """Chambers-Mallows-Stuck transform of uniform pairs.

    ``u`` has a trailing axis of length 2.  The result has characteristic
    function ``exp(-|scale t|^alpha (1 - i skew sign(t) tan(pi alpha / 2)))``
    (alpha != 1), i.e. zero mean for alpha > 1.
    """
    v = math.pi * (u[..., 0] - 0.5)
    w = -np.log1p(-u[..., 1])
    if alpha == 2.0:
        return scale * 2.0 * np.sin(v) * np.sqrt(w)
    t = skew * math.tan(math.pi * alpha / 2.0)
    b = math.atan(t) / alpha
    s = (1.0 + t * t) ** (1.0 / (2.0 * alpha))
    x = (s * np.sin(alpha * (v + b)) / np.cos(v) ** (1.0 / alpha)
         * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha))
    return scale * x


def stable_rvs(alpha, skew, scale, rng, size):
    """Draw stable variates; see :func:`stable_from_uniforms`."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    return stable_from_uniforms(rng.random(shape + (2,)), alpha, skew, scale)


_TINY = np.finfo(float).tiny


def _symmetric_radius(u):
    """Map uniforms on [0, 1) in place to ``w = u - 1/2`` and return ``1 - 2|w|``.

    The radius is uniform on (0, 1] (clamped away from 0) and independent of
    the sign of ``w``.
    """
    u -= 0.5
    r = np.abs(u)
    r *= -2.0
    r += 1.0
    np.maximum(r, _TINY, out=r)
    return r


def _inv_laplace(u, beta):
    # u in [0, 1) -> Laplace(0, 1/beta), symmetric inversion
    r = _symmetric_radius(u)
    np.log(r, out=r)
    r *= -1.0 / beta
    return np.copysign(r, u, out=r)


# --------------------------------------------------------------------------
# base class
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpSpec:
    """Base class for jump laws.  Subclasses are frozen dataclasses."""

    kind: ClassVar[str] = "abstract"

    # -- descriptive properties -------------------------------------------
    alpha: ClassVar[float] = 2.0

    @property
    def centered(self) -> bool:
        return True

    @property
    def variance(self) -> float:
        return math.inf

    @property
    def scale_hint(self) -> float:
        return 1.0

    @property
    def support_radius(self) -> float:
        """Smallest value of |x| in the support."""
        return 0.0

    @property
    def limit_skew(self) -> str:
        return "symmetric"

    @property
    def continuous_v(self) -> bool:
        return True

    def breakpoints(self):
        return ()

    # -- sampling ----------------------------------------------------------
    def draw(self, rng, shape):
        raise NotImplementedError

    # -- closed forms (override where available) ---------------------------
    def pdf(self, x):
        raise NotImplementedError(f"{self.kind} has no density")

    def _second_moment(self, x):
        raise NotImplementedError

    def _tail(self, x):
        raise NotImplementedError

    def _mean_in(self, x):
        raise NotImplementedError

    # -- serialization -----------------------------------------------------
    def to_block(self) -> dict:
        out = {"kind": self.kind}
        for f in dataclasses.fields(self):
            out[f.name] = repr(float(getattr(self, f.name)))
        return out

    def __str__(self):
        args = ", ".join(f"{f.name}={getattr(self, f.name):g}"
                         for f in dataclasses.fields(self))
        return f"{self.kind}({args})"


def _check_positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")


def _check_alpha(alpha, upper_closed=False):
    ok = 1.0 < alpha <= 2.0 if upper_closed else 1.0 < alpha < 2.0
    if not ok:
        rng = "(1, 2]" if upper_closed else "(1, 2)"
        raise ConfigError(f"alpha must lie in {rng}, got {alpha!r}")


@dataclass(frozen=True)
class Gaussian(JumpSpec):
    sigma: float = 1.0
    kind: ClassVar[str] = "Gaussian"

    def __post_init__(self):
        _check_positive("sigma", self.sigma)

    @property
    def variance(self):
        return self.sigma ** 2

    @property
    def scale_hint(self):
        return self.sigma

    def draw(self, rng, shape):
        return self.sigma * rng.standard_normal(shape)

    def pdf(self, x):
        z = np.asarray(x) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))

    def _second_moment(self, x):
        return self.sigma ** 2 * special.gammainc(1.5, x * x / (2 * self.sigma ** 2))

    def _tail(self, x):
        return special.erfc(x / (self.sigma * math.sqrt(2.0)))

    def _mean_in(self, x):
        return 0.0


@dataclass(frozen=True)
class ExpDifference(JumpSpec):
    """``U - V`` with ``U, V`` independent exponential(beta): Laplace law."""

    beta: float = 1.0
    kind: ClassVar[str] = "ExpDifference"

    def __post_init__(self):
        _check_positive("beta", self.beta)

    @property
    def variance(self):
        return 2.0 / self.beta ** 2

    @property
    def scale_hint(self):
        return 1.0 / self.beta

    def draw(self, rng, shape):
        return _inv_laplace(rng.random(shape), self.beta)

    def pdf(self, x):
        return 0.5 * self.beta * np.exp(-self.beta * np.abs(x))

    def _second_moment(self, x):
        return 2.0 / self.beta ** 2 * special.gammainc(3.0, self.beta * x)

    def _tail(self, x):
        return math.exp(-self.beta * x)

    def _mean_in(self, x):
        return 0.0


@dataclass(frozen=True)
class TwoSidedPareto(JumpSpec):
    """Symmetric density ``(alpha/2) xmin^alpha |x|^(-alpha-1)`` on ``|x| >= xmin``."""

    alpha: float = 1.5
    xmin: float = 1.0
    kind: ClassVar[str] = "TwoSidedPareto"

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_positive("xmin", self.xmin)

    @property
    def scale_hint(self):
        return self.xmin

    @property
    def support_radius(self):
        return self.xmin

    def breakpoints(self):
        return (-self.xmin, self.xmin)

    def draw(self, rng, shape):
        u = rng.random(shape)
        r = _symmetric_radius(u)
        np.power(r, -1.0 / self.alpha, out=r)
        if self.xmin != 1.0:
            r *= self.xmin
        return np.copysign(r, u, out=r)

    def pdf(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        a, m = self.alpha, self.xmin
        with np.errstate(divide="ignore"):
            dens = 0.5 * a * m ** a * ax ** (-a - 1.0)
        return np.where(ax >= m, dens, 0.0)

    def _second_moment(self, x):
        a, m = self.alpha, self.xmin
        if x < m:
            return 0.0
        return a * m ** a * (x ** (2 - a) - m ** (2 - a)) / (2 - a)

    def _tail(self, x):
        return 1.0 if x < self.xmin else (self.xmin / x) ** self.alpha

    def _mean_in(self, x):
        return 0.0



@dataclass(frozen=True)
class OneSidedParetoCentered(JumpSpec):
    """``P - E P`` for ``P`` Pareto(alpha, xmin); only the right tail is heavy."""

    alpha: float = 1.5
    xmin: float = 1.0
    kind: ClassVar[str] = "OneSidedParetoCentered"

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_positive("xmin", self.xmin)

    @property
    def mean_shift(self):
        return self.alpha * self.xmin / (self.alpha - 1.0)

    @property
    def scale_hint(self):
        return self.xmin

    @property
    def limit_skew(self):
        return "spectrally-positive"

    def breakpoints(self):
        return (self.xmin - self.mean_shift,)

    def draw(self, rng, shape):
        u = rng.random(shape)
        np.subtract(1.0, u, out=u)
        np.power(u, -1.0 / self.alpha, out=u)
        if self.xmin != 1.0:
            u *= self.xmin
        u -= self.mean_shift
        return u

    def pdf(self, x):
        p = np.asarray(x, dtype=float) + self.mean_shift
        a, m = self.alpha, self.xmin
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = a * m ** a * np.abs(p) ** (-a - 1.0)
        return np.where(p >= m, dens, 0.0)

    def _power_integral(self, j, lo, hi):
        # int_lo^hi p^j * alpha xmin^alpha p^(-alpha-1) dp, lo >= xmin
        a, m = self.alpha, self.xmin
        e = j - a
        hi_term = 0.0 if math.isinf(hi) else hi ** e
        return a * m ** a * (hi_term - lo ** e) / e

    def _window(self, x):
        mu = self.mean_shift
        return max(self.xmin, mu - x), mu + x

    def _second_moment(self, x):
        mu = self.mean_shift
        lo, hi = self._window(x)
        if hi <= lo:
            return 0.0
        i0, i1, i2 = (self._power_integral(j, lo, hi) for j in (0, 1, 2))
        return max(i2 - 2 * mu * i1 + mu * mu * i0, 0.0)

    def _tail(self, x):
        mu, a, m = self.mean_shift, self.alpha, self.xmin
        right = (m / (mu + x)) ** a
        left = 1.0 - (m / (mu - x)) ** a if mu - x > m else 0.0
        return right + left

    def _mean_in(self, x):
        mu = self.mean_shift
        lo, hi = self._window(x)
        if hi <= lo:
            return 0.0
        return self._power_integral(1, lo, hi) - mu * self._power_integral(0, lo, hi)



@dataclass(frozen=True)
class Rademacher(JumpSpec):
    kind: ClassVar[str] = "Rademacher"

    @property
    def variance(self):
        return 1.0

    @property
    def support_radius(self):
        return 1.0

    @property
    def continuous_v(self):
        return False

    def draw(self, rng, shape):
        return np.where(rng.random(shape) < 0.5, -1.0, 1.0)

    def _second_moment(self, x):
        return 1.0 if x >= 1.0 else 0.0

    def _tail(self, x):
        return 1.0 if x < 1.0 else 0.0

    def _mean_in(self, x):
        return 0.0


@dataclass(frozen=True)
class SymmetricStable(JumpSpec):
    """Symmetric stable law with log characteristic function ``-|scale t|^alpha``.

    With alpha = 2 this is the normal law with variance ``2 scale^2``.
    """

    alpha: float = 1.5
    scale: float = 1.0
    kind: ClassVar[str] = "SymmetricStable"

    def __post_init__(self):
        _check_alpha(self.alpha, upper_closed=True)
        _check_positive("scale", self.scale)

    @property
    def variance(self):
        return 2 * self.scale ** 2 if self.alpha == 2.0 else math.inf

    @property
    def scale_hint(self):
        return self.scale

    def _gauss(self):
        return Gaussian(math.sqrt(2.0) * self.scale)

    def _scipy(self):
        from scipy.stats import levy_stable
        return levy_stable(self.alpha, 0.0, scale=self.scale)

    def draw(self, rng, shape):
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        return stable_from_uniforms(rng.random(shape + (2,)), self.alpha, 0.0, self.scale)

    def pdf(self, x):
        if self.alpha == 2.0:
            return self._gauss().pdf(x)
        return self._scipy().pdf(x)

    def _second_moment(self, x):
        if self.alpha == 2.0:
            return self._gauss()._second_moment(x)
        # integration by parts against the (cheap) survival function
        law = self._scipy()
        f = lambda u: 4.0 * u * float(law.sf(u))
        inner = integrate.quad(f, 0.0, x, epsabs=QUAD_ABS_TOL, epsrel=1e-10, limit=200)
        return inner[0] - x * x * 2.0 * float(law.sf(x))

    def _tail(self, x):
        if self.alpha == 2.0:
            return self._gauss()._tail(x)
        return 2.0 * float(self._scipy().sf(x))

    def _mean_in(self, x):
        return 0.0


@dataclass(frozen=True)
class ServiceMinusShiftedArrival(JumpSpec):
    """Increments ``U - (V + shift)``; ``U, V`` exponential(beta).

    This is the GI/M/1 queue's service-minus-interarrival law.  Its mean is
    ``-shift`` so it is only centered when ``shift == 0``; intended as an
    oracle spec with the drift built in.
    """

    beta: float = 1.0
    shift: float = 0.0
    kind: ClassVar[str] = "ServiceMinusShiftedArrival"

    def __post_init__(self):
        _check_positive("beta", self.beta)
        if not (self.shift >= 0 and math.isfinite(self.shift)):
            raise ConfigError(f"shift must be >= 0, got {self.shift!r}")

    @property
    def centered(self):
        return self.shift == 0.0

    @property
    def variance(self):
        return 2.0 / self.beta ** 2

    @property
    def scale_hint(self):
        return 1.0 / self.beta

    def breakpoints(self):
        return (-self.shift,)

    def draw(self, rng, shape):
        x = _inv_laplace(rng.random(shape), self.beta)
        x -= self.shift
        return x

    def pdf(self, x):
        return 0.5 * self.beta * np.exp(-self.beta * np.abs(np.asarray(x) + self.shift))

    def _tail(self, x):
        # X = L - shift with L Laplace(0, 1/beta)
        def upper(t):
            return 0.5 * math.exp(-self.beta * t) if t >= 0 else 1 - 0.5 * math.exp(self.beta * t)
        return upper(x + self.shift) + 1.0 - upper(self.shift - x)


KINDS = {cls.kind: cls for cls in (Gaussian, ExpDifference, TwoSidedPareto,
                                   OneSidedParetoCentered, Rademacher,
                                   SymmetricStable, ServiceMinusShiftedArrival)}


def spec_from_block(block: dict) -> JumpSpec:
    """Build a spec from a ``kind = ...`` / ``key = value`` mapping."""
    block = dict(block)
    try:
        kind = block.pop("kind")
    except KeyError:
        raise ConfigError("spec block needs a 'kind' entry") from None
    cls = KINDS.get(kind)
    if cls is None:
        raise ConfigError(f"unknown jump kind {kind!r}; choose from {sorted(KINDS)}")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in block.items():
        name = key
        if name not in names:
            raise ConfigError(f"{kind} does not take parameter {key!r}")
        try:
            kwargs[name] = float(raw)
        except ValueError:
            raise ConfigError(f"{kind}.{key} must be a number, got {raw!r}") from None
    return cls(**kwargs)


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def sample(spec: JumpSpec, rng, size=None):
    """One draw (``size=None``) or an array of draws from ``spec``."""
    if size is None:
        return float(spec.draw(rng, ()))
    return spec.draw(rng, size)


def _quad(spec, f, lo, hi, x):
    pts = [p for p in spec.breakpoints() if lo < p < hi] or None
    if math.isinf(lo) or math.isinf(hi):
        pts = None
    res = integrate.quad(f, lo, hi, points=pts, epsabs=QUAD_ABS_TOL,
                         epsrel=1e-10, limit=500, full_output=1)
    if len(res) > 3 and res[1] > 1e3 * QUAD_ABS_TOL:
        raise QuadratureError(f"quadrature did not converge for {spec} at x={x!r}: "
                              f"{res[3].splitlines()[0] if res[3] else 'no message'}")
    return res[0]


def quad_truncated_moment(spec: JumpSpec, x: float, power: int) -> float:
    """``E(X^power; |X| <= x)`` by adaptive quadrature of the density."""
    try:
        spec.pdf(0.0)
    except NotImplementedError:
        raise QuadratureError(f"{spec} has no density; quadrature unavailable") from None
    return _quad(spec, lambda u: u ** power * float(spec.pdf(u)), -x, x, x)


def quad_tail(spec: JumpSpec, x: float) -> float:
    f = lambda u: float(spec.pdf(u))
    return _quad(spec, f, x, math.inf, x) + _quad(spec, f, -math.inf, -x, x)


def _positive(x):
    if not x > 0:
        raise ConfigError(f"x must be positive, got {x!r}")
    return float(x)


def truncated_second_moment(spec: JumpSpec, x: float) -> float:
    """``V(x) = E(X^2; |X| <= x)``."""
    x = _positive(x)
    try:
        return float(spec._second_moment(x))
    except NotImplementedError:
        return quad_truncated_moment(spec, x, 2)


def tail_probability(spec: JumpSpec, x: float) -> float:
    """``P(|X| > x)`` for ``x >= 0``."""
    if not x >= 0:
        raise ConfigError(f"x must be nonnegative, got {x!r}")
    x = float(x)
    try:
        return float(spec._tail(x))
    except NotImplementedError:
        return quad_tail(spec, x)


def truncated_mean(spec: JumpSpec, x: float) -> float:
    """``E(X; |X| <= x)``."""
    x = _positive(x)
    try:
        return float(spec._mean_in(x))
    except NotImplementedError:
        return quad_truncated_moment(spec, x, 1)


def truncated_mean_abs(spec: JumpSpec, x: float) -> float:
    """``|E(X; |X| <= x)|``, equal to ``|E(X; |X| > x)|`` for centered laws."""
    if not spec.centered:
        raise ConfigError(f"{spec} is not centered")
    return abs(truncated_mean(spec, x))
