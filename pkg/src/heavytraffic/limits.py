"""Limit laws of the scaled maximum ``M* = sup_{t >= 0} (xi_t - t)``.

``xi`` is the stable Levy process obtained as the limit of ``S_[nt] / c_n``
under the last-exit norming (``V(c_n)/c_n^2 = 1/n``).  For that norming the
Levy measure has total tail ``nu(|y| > r) = ((2 - alpha)/alpha) r^-alpha``,
which pins every constant below:

* stable scale ``sigma^alpha = Gamma(3 - alpha) |cos(pi alpha / 2)| / (alpha (alpha - 1))``
* spectrally positive: ``P(M* > x) = E_{alpha-1}(-c x^(alpha-1))`` with
  ``c = alpha (alpha - 1) / Gamma(3 - alpha)``
* spectrally negative: ``M*`` exponential with rate ``kappa^(-1/(alpha-1))``,
  ``kappa = Gamma(3 - alpha) / (alpha (alpha - 1))``

At alpha = 2, xi is standard Brownian motion and ``M* ~ Exp(2)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate, interpolate, optimize, special

from . import mc
from .errors import AccuracyError, ConfigError
from .jumps import stable_from_uniforms
from .stats import EmpiricalDistribution, ks_distance, loglog_slope

SKEWS = {"symmetric": 0.0, "spectrally-positive": 1.0, "spectrally-negative": -1.0}
ML_ABS_TOL = 1e-8
SERIES_RADIUS = 10.0
# beyond this working precision the integral form is far cheaper
SERIES_MAX_DIGITS = 200


def _check_alpha(alpha):
    if not 1.0 < alpha <= 2.0:
        raise ConfigError(f"alpha must lie in (1, 2], got {alpha!r}")


def skew_value(tag):
    try:
        return SKEWS[tag]
    except KeyError:
        raise ConfigError(f"unknown skew tag {tag!r}; choose from {sorted(SKEWS)}") from None


def _kappa(alpha):
    return special.gamma(3.0 - alpha) / (alpha * (alpha - 1.0))


def limit_stable_scale(alpha):
    """Scale of ``xi_1`` in the ``exp(-|sigma t|^alpha ...)`` parametrization."""
    _check_alpha(alpha)
    if alpha == 2.0:
        return 1.0 / math.sqrt(2.0)
    return (_kappa(alpha) * abs(math.cos(math.pi * alpha / 2.0))) ** (1.0 / alpha)


def mittag_leffler_scale(alpha):
    """Rate ``c`` in ``P(M* > x) = E_{alpha-1}(-c x^(alpha-1))`` (spectrally positive)."""
    _check_alpha(alpha)
    return 1.0 / _kappa(alpha)


def spectrally_negative_rate(alpha):
    _check_alpha(alpha)
    return _kappa(alpha) ** (-1.0 / (alpha - 1.0))


# --------------------------------------------------------------------------
# closed-form laws
# --------------------------------------------------------------------------

def kingman_cdf(x, sigma2):
    """Heavy-traffic exponential law ``1 - exp(-2 x / sigma^2)``."""
    if not sigma2 > 0:
        raise ConfigError("sigma2 must be positive")
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, -np.expm1(-2.0 * np.maximum(x, 0.0) / sigma2), 0.0)
    return float(out) if out.ndim == 0 else out


def standardized_exponential_cdf(x):
    """Exp(2): the law of ``M*`` when alpha = 2."""
    return kingman_cdf(x, 1.0)


# --------------------------------------------------------------------------
# Mittag-Leffler function on the negative half-line
# --------------------------------------------------------------------------

def _ml_series(beta, x):
    # sum_k (-x)^k / Gamma(beta k + 1) with enough digits to absorb cancellation
    digits = x ** (1.0 / beta) / math.log(10.0)
    if digits > SERIES_MAX_DIGITS:
        return None
    with mpmath.workdps(int(digits) + 30):
        z = -mpmath.mpf(x)
        b = mpmath.mpf(beta)
        total = mpmath.mpf(0)
        k = 0
        tiny = mpmath.mpf(10) ** (-25)
        while True:
            term = z ** k / mpmath.gamma(b * k + 1)
            total += term
            if abs(term) < tiny and beta * k > x ** (1.0 / beta) + 10:
                break
            k += 1
        return float(total)


def _ml_asymptotic(beta, x):
    """Optimally truncated expansion; returns ``(value, error estimate)``."""
    total, prev = 0.0, math.inf
    for k in range(1, 200):
        arg = 1.0 - beta * k
        if arg <= 0 and arg == math.floor(arg):
            term = 0.0
        else:
            term = (-1.0) ** (k + 1) * special.gammasgn(arg) * math.exp(
                -k * math.log(x) - special.gammaln(arg))
        mag = abs(term)
        if mag > prev and mag > 0:
            return total, mag
        total += term
        if mag:
            prev = mag
    return total, prev


def _ml_integral(beta, x):
    # E_beta(-x) = sin(beta pi)/(beta pi) int_0^inf exp(-(s x)^(1/beta)) / (s^2 + 2 s cos(beta pi) + 1) ds
    c = math.cos(beta * math.pi)
    f = lambda s: math.exp(-(s * x) ** (1.0 / beta)) / (s * s + 2.0 * s * c + 1.0)
    # the exponential factor lives on s ~ 1/x
    knee = 1.0 / x
    parts = [integrate.quad(f, 0.0, knee, epsabs=1e-14, epsrel=1e-12, limit=200),
             integrate.quad(f, knee, 50.0 * knee, epsabs=1e-14, epsrel=1e-12, limit=200),
             integrate.quad(f, 50.0 * knee, math.inf, epsabs=1e-14, epsrel=1e-12, limit=200)]
    return math.sin(beta * math.pi) / (beta * math.pi) * sum(p[0] for p in parts)


def _ml_large(beta, x):
    val, err = _ml_asymptotic(beta, x)
    if err < 1e-3 * ML_ABS_TOL:
        return val
    return _ml_integral(beta, x)


@functools.lru_cache(maxsize=128)
def _check_switchover(beta):
    below = _ml_series(beta, SERIES_RADIUS)
    if below is None:
        return
    above = _ml_large(beta, SERIES_RADIUS)
    if abs(below - above) > ML_ABS_TOL:
        raise AccuracyError(f"Mittag-Leffler branches disagree at |z|={SERIES_RADIUS} "
                            f"for beta={beta}: {below!r} vs {above!r}")


def mittag_leffler_E(beta, z):
    """``E_beta(z) = sum_k z^k / Gamma(beta k + 1)`` for ``0 < beta <= 1``, ``z <= 0``.

    Power series (extended precision) for ``|z| <= 10`` unless the
    cancellation needs more than 200 digits; beyond that the
    optimally truncated asymptotic expansion, or the integral
    representation when the expansion cannot reach 1e-8.
    """
    if not 0.0 < beta <= 1.0:
        raise ConfigError(f"beta must lie in (0, 1], got {beta!r}")
    if z > 0:
        raise ConfigError(f"z must be <= 0, got {z!r}")
    x = -float(z)
    if x == 0.0:
        return 1.0
    if beta == 1.0:
        return math.exp(-x)
    if x <= SERIES_RADIUS:
        val = _ml_series(beta, x)
        return _ml_integral(beta, x) if val is None else val
    _check_switchover(beta)
    return _ml_large(beta, x)


def _ml_vector(beta, x):
    """``E_beta(-x)`` on an array via a log-spaced spline of the scalar routine."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    pos = x > 0
    if not pos.any():
        return out
    if beta == 1.0:
        out[pos] = np.exp(-x[pos])
        return out
    lo, hi = x[pos].min(), x[pos].max()
    if pos.sum() <= 64:
        out[pos] = [mittag_leffler_E(beta, -v) for v in x[pos]]
        return out
    nodes = np.geomspace(lo, hi, max(16, int(64 * math.log10(hi / lo)) + 2)) if hi > lo \
        else np.array([lo])
    if nodes.size == 1:
        out[pos] = mittag_leffler_E(beta, -lo)
        return out
    vals = np.array([mittag_leffler_E(beta, -v) for v in nodes])
    spline = interpolate.CubicSpline(np.log(nodes), vals)
    out[pos] = spline(np.log(x[pos]))
    return out


def mstar_tail_spectrally_positive(x, alpha, c):
    """``P(M* > x) = E_{alpha-1}(-c x^(alpha-1))``."""
    _check_alpha(alpha)
    if not c > 0:
        raise ConfigError("scale c must be positive")
    x = np.asarray(x, dtype=float)
    z = c * np.maximum(x, 0.0) ** (alpha - 1.0)
    out = _ml_vector(alpha - 1.0, z)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# law descriptors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentialLimit:
    sigma2: float

    def cdf(self, x):
        return kingman_cdf(x, self.sigma2)


@dataclass(frozen=True)
class StandardizedExponential:
    def cdf(self, x):
        return standardized_exponential_cdf(x)


@dataclass(frozen=True)
class MittagLeffler:
    alpha: float
    c: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.c > 0:
            raise ConfigError("scale c must be positive")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x > 0, 1.0 - np.asarray(mstar_tail_spectrally_positive(x, self.alpha, self.c)), 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MonteCarloStable:
    alpha: float
    skew: str = "symmetric"

    def __post_init__(self):
        _check_alpha(self.alpha)
        skew_value(self.skew)

    def sample_sup(self, T, grid_steps, trials, seed, **kw):
        return mstar_sup_mc(self.alpha, self.skew, T, grid_steps, trials, seed, **kw)


# --------------------------------------------------------------------------
# Monte Carlo for M*
# --------------------------------------------------------------------------

def _xi_draw(alpha, skew, rng, shape):
    u = rng.random(tuple(shape) + (2,))
    return stable_from_uniforms(u, alpha, skew_value(skew), limit_stable_scale(alpha))


def _sup_chunk(task):
    alpha, skew, T, steps, n_paths, seed, index, bridge = task
    rng, brng = mc.chunk_rngs(seed, index)
    dt = T / steps
    block = max(1, mc.BLOCK_ELEMS // n_paths)
    level = np.zeros(n_paths)
    best = np.zeros(n_paths)
    done = 0
    use_bridge = bridge and alpha == 2.0
    while done < steps:
        b = min(block, steps - done)
        x = _xi_draw(alpha, skew, rng, (b, n_paths))
        x *= dt ** (1.0 / alpha)
        x -= dt
        if use_bridge:
            inc = x.copy()
        np.cumsum(x, axis=0, out=x)
        x += level
        if use_bridge:
            # exact maximum of the Brownian bridge between grid points
            start = np.vstack([level[None, :], x[:-1]])
            e = -2.0 * dt * np.log1p(-brng.random((b, n_paths)))
            peak = 0.5 * (start + x + np.sqrt(inc * inc + e))
            np.maximum(best, peak.max(axis=0), out=best)
        np.maximum(best, x.max(axis=0), out=best)
        level = x[-1].copy()
        done += b
    return best


def mstar_sup_mc(alpha, skew, T, grid_steps, trials, seed, bridge=True, max_steps=None):
    """Samples of ``sup_{t <= T} (xi_t - t)`` on a uniform grid.

    At alpha = 2 the supremum inside each grid cell is drawn exactly from the
    Brownian bridge law (``bridge=True``), removing the grid bias.  For
    alpha < 2 the grid maximum is returned and under-estimates the supremum
    by a grid-size dependent amount.
    """
    _check_alpha(alpha)
    skew_value(skew)
    if not T >= 1:
        raise ConfigError("T must be >= 1")
    mc.check_budget(float(grid_steps) * trials, max_steps, "reduce grid_steps or trials")
    tasks = [(alpha, skew, float(T), int(grid_steps), p, seed, i, bridge)
             for i, p in enumerate(mc.chunk_sizes(trials))]
    parts = mc.map_ordered(_sup_chunk, tasks)
    return EmpiricalDistribution.from_samples(np.concatenate(parts),
                                              tag=f"sup:{alpha}:{skew}:{T}:{grid_steps}:{seed}")


def mstar_sup_refined(alpha, skew, T, trials, seed, grid_steps=1000, ks_tol=0.01,
                      max_halvings=4, **kw):
    """Halve the grid step until successive empirical laws differ by < ``ks_tol``.

    Returns ``(dist, history)`` with ``history`` the list of
    ``(grid_steps, ks_to_previous)``.
    """
    from .stats import ks_two_sample
    prev = mstar_sup_mc(alpha, skew, T, grid_steps, trials, seed, **kw)
    history = [(grid_steps, math.nan)]
    for _ in range(max_halvings):
        grid_steps *= 2
        cur = mstar_sup_mc(alpha, skew, T, grid_steps, trials, seed, **kw)
        d = ks_two_sample(prev, cur)
        history.append((grid_steps, d))
        prev = cur
        if d < ks_tol:
            break
    return prev, history


@dataclass(frozen=True)
class QuadratureWindow:
    """Integration window ``[eps, T]`` with log-spaced nodes for the v-integral."""

    eps: float = 1e-6
    T: float = 60.0
    nodes: int = 400
    samples: int = 10 ** 5

    def __post_init__(self):
        if not (0 < self.eps < 1 < self.T):
            raise ConfigError("window needs 0 < eps < 1 < T")
        if self.nodes < 2 or self.samples < 2:
            raise ConfigError("window needs >= 2 nodes and samples")

    @property
    def v_grid(self):
        return np.geomspace(self.eps, self.T, self.nodes)

    def log_weights(self):
        lv = np.log(self.v_grid)
        w = np.zeros_like(lv)
        h = np.diff(lv)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return w


def _positive_part_mean(alpha, xi):
    if alpha == 2.0:
        return 1.0 / math.sqrt(2.0 * math.pi)
    return float(np.maximum(xi, 0.0).mean())


def _outer_budget(alpha, skew, T):
    # int_T^inf v^{-1} P(xi_1 > v^{1 - 1/alpha}) dv
    if alpha == 2.0:
        f = lambda lv: 0.5 * special.erfc(math.sqrt(math.exp(lv)) / math.sqrt(2.0))
    else:
        from scipy.stats import levy_stable
        law = levy_stable(alpha, skew_value(skew), scale=limit_stable_scale(alpha))
        f = lambda lv: float(law.sf(math.exp(lv * (1.0 - 1.0 / alpha))))
    return integrate.quad(f, math.log(T), math.log(T) + 60.0, limit=200)[0] + (
        0.0 if alpha == 2.0 else _tail_constant(alpha, skew) * T ** (1 - alpha) * math.exp(-60.0 * (alpha - 1.0)) / (alpha - 1.0))


def _tail_constant(alpha, skew):
    # P(xi_1 > y) ~ A y^-alpha with A = nu(y, inf) y^alpha
    p_plus = 0.5 * (1.0 + skew_value(skew))
    return p_plus * (2.0 - alpha) / alpha


def _laplace_chunk(task):
    mu, alpha, skew, v, w, n_paths, seed, index = task
    rng, = mc.chunk_rngs(seed, index, streams=1)
    xi = _xi_draw(alpha, skew, rng, (n_paths,))
    scale = v ** (1.0 / alpha)
    out = np.zeros(n_paths)
    rows = max(1, mc.BLOCK_ELEMS // v.size)
    for s in range(0, n_paths, rows):
        y = xi[s:s + rows, None] * scale[None, :] - v[None, :]
        g = np.where(y > 0, -np.expm1(-mu * np.maximum(y, 0.0)), 0.0)
        out[s:s + rows] = g @ w
    return out, xi


def mstar_laplace_mc(mu, alpha, skew, window: QuadratureWindow, seed, tol=None,
                     max_samples=10 ** 7):
    """Monte Carlo value of ``exp{-int_eps^T v^-1 E(1 - e^{-mu(xi_v - v)}; xi_v > v) dv}``.

    One sample of ``xi_1`` feeds every node through ``xi_v = v^(1/alpha) xi_1``
    and the per-sample integrals give the standard error.  Returns
    ``(estimate, stderr, eps_budget, T_budget)`` where the budgets bound the
    integral mass cut off below ``eps`` and above ``T``.
    """
    _check_alpha(alpha)
    if mu < 0:
        raise ConfigError("mu must be >= 0")
    if mu == 0:
        return 1.0, 0.0, 0.0, 0.0
    v, w = window.v_grid, window.log_weights()
    n = window.samples
    while True:
        tasks = [(float(mu), alpha, skew, v, w, p, seed, i)
                 for i, p in enumerate(mc.chunk_sizes(n))]
        parts = mc.map_ordered(_laplace_chunk, tasks)
        integ = np.concatenate([p[0] for p in parts])
        xi = np.concatenate([p[1] for p in parts])
        est = math.exp(-integ.mean())
        se = est * integ.std(ddof=1) / math.sqrt(integ.size)
        if tol is None or se <= tol:
            break
        if n >= max_samples:
            raise AccuracyError(f"stderr {se:.3g} above tolerance {tol:.3g} "
                                f"after {n} samples")
        n = min(2 * n, max_samples)
    eps_budget = mu * alpha * window.eps ** (1.0 / alpha) * _positive_part_mean(alpha, xi)
    T_budget = _outer_budget(alpha, skew, window.T)
    return est, se, eps_budget, T_budget


def limit_integrand_mc(v, mu, alpha, skew, samples, seed):
    """``(v^-1 E(1 - e^{-mu(xi_v - v)}; xi_v > v), stderr)`` by direct sampling."""
    rng, = mc.chunk_rngs(seed, 0, streams=1)
    xi = _xi_draw(alpha, skew, rng, (samples,))
    y = v ** (1.0 / alpha) * xi - v
    g = np.where(y > 0, -np.expm1(-mu * np.maximum(y, 0.0)), 0.0) / v
    return float(g.mean()), float(g.std(ddof=1) / math.sqrt(samples))


def limit_integrand_gaussian(v, mu):
    """Exact alpha = 2 integrand by one-dimensional quadrature over ``Z ~ N(0, 1)``."""
    rv = math.sqrt(v)
    f = lambda z: -math.expm1(-mu * (rv * z - v)) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    val = integrate.quad(f, rv, math.inf, epsabs=1e-13, epsrel=1e-11)[0]
    return val / v


# --------------------------------------------------------------------------
# fitting / tail diagnostics
# --------------------------------------------------------------------------

def calibrate_ml_scale(dist: EmpiricalDistribution, alpha, c_lo=1e-3, c_hi=1e3):
    """Mittag-Leffler rate ``c`` minimizing the KS distance to ``dist``.

    Returns ``(c, ks)``.
    """
    _check_alpha(alpha)
    beta = alpha - 1.0
    pos = dist.samples[dist.samples > 0]
    if pos.size == 0:
        raise ConfigError("no positive samples to calibrate against")
    # one spline of E_beta(-z) covers every trial rate since z = c x^beta
    xb = pos ** beta
    z_lo, z_hi = c_lo * xb.min(), c_hi * xb.max()
    nodes = np.geomspace(z_lo, z_hi, max(16, int(64 * math.log10(z_hi / z_lo)) + 2))
    spline = interpolate.CubicSpline(np.log(nodes), [mittag_leffler_E(beta, -z) for z in nodes])

    def cdf(c):
        def f(x):
            x = np.asarray(x, dtype=float)
            z = c * np.maximum(x, 0.0) ** beta
            out = np.zeros_like(x)
            ok = x > 0
            out[ok] = 1.0 - spline(np.log(np.clip(z[ok], z_lo, z_hi)))
            return out
        return f

    obj = lambda lc: ks_distance(dist, cdf(math.exp(lc)))
    grid = np.linspace(math.log(c_lo), math.log(c_hi), 25)
    vals = [obj(g) for g in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-4})
    c = float(math.exp(res.x))
    # report the distance under the exact law, not the spline
    return c, float(ks_distance(dist, MittagLeffler(alpha, c).cdf))


def tail_slope_estimate(dist: EmpiricalDistribution, quantile_lo=0.95, quantile_hi=0.999):
    """Least-squares slope of ``log P(M > x)`` against ``log x`` between two quantiles."""
    if dist.count < 10 ** 4:
        raise ConfigError(f"need >= 1e4 samples, got {dist.count}")
    x = dist.samples
    lo, hi = np.quantile(x, [quantile_lo, quantile_hi])
    u, counts = np.unique(x[(x >= lo) & (x <= hi) & (x > 0)], return_counts=True)
    surv = 1.0 - np.searchsorted(x, u, side="right") / dist.count
    keep = surv > 0
    if keep.sum() < 30:
        raise ConfigError(f"only {int(keep.sum())} points in the tail window; need 30")
    slope, _, _ = loglog_slope(np.column_stack([u[keep], surv[keep]]))
    return slope
