"""Norming sequence ``c_n`` and the heavy-traffic time scale ``n(a)``.

``c_n`` is the last exit of ``u -> V(u)/u^2`` above ``1/n``:

    c_n = sup{u > 0 : V(u) / u^2 > 1/n}

which is the eventual crossing of the decreasing regularly varying tail of
``V(u)/u^2``.  ``n(a)`` is the first ``n`` beyond the small-``n`` transient
with ``c_n <= a n``, where the transient ends at the peak of ``c_n / n``.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, ConfigError
from .jumps import JumpSpec, tail_probability, truncated_second_moment

REL_TOL = 1e-9
U_MAX = 1e30
N_MAX = 10 ** 12
SCAN_FACTOR = 2.0 ** 0.25
# n below this is scanned one by one; beyond it c_n / n is taken as monotone
N_SCAN = 64


def _ratio(spec, u):
    return truncated_second_moment(spec, u) / (u * u)


def _pruitt(spec, u):
    # E min(X^2/u^2, 1): nonincreasing in u and >= V(u)/u^2
    return _ratio(spec, u) + tail_probability(spec, u)


@functools.lru_cache(maxsize=65536)
def _last_exit(spec, n):
    target = 1.0 / n
    u_hi = spec.scale_hint
    while _pruitt(spec, u_hi) > target:
        u_hi *= 2.0
        if u_hi > U_MAX:
            raise BracketError(f"no bracket for c_n with n={n} below u={U_MAX:g} for {spec}")
    # every u >= u_hi has V(u)/u^2 <= 1/n; scan down for the last exit
    u_floor = spec.scale_hint * 1e-12
    u_lo = u_hi
    while _ratio(spec, u_lo) <= target:
        u_hi = u_lo
        u_lo /= SCAN_FACTOR
        if u_lo < u_floor:
            return None
    while u_hi - u_lo > REL_TOL * u_hi:
        mid = 0.5 * (u_lo + u_hi)
        if _ratio(spec, mid) > target:
            u_lo = mid
        else:
            u_hi = mid
    return 0.5 * (u_lo + u_hi)


def c_of_n(spec: JumpSpec, n: int) -> float:
    """Last-exit norming constant ``c_n``; see module docstring.

    When ``V(u)/u^2`` never exceeds ``1/n`` (small ``n``) the smallest
    support radius of ``|X|`` is returned.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    c = _last_exit(spec, int(n))
    return spec.support_radius if c is None else c


def _above(spec, n, a):
    # c_n > a n, with slack matching the bisection tolerance
    return c_of_n(spec, n) > a * n * (1.0 + 4 * REL_TOL)


@functools.lru_cache(maxsize=256)
def _regime_start(spec):
    """First maximizer of ``c_n / n`` over ``n <= N_SCAN``.

    Below it ``c_n`` is in its small-``n`` transient (possibly zero when
    ``V(u)/u^2`` never exceeds ``1/n``); beyond it ``c_n / n`` decreases.
    """
    ratios = [(c / n if c is not None else -1.0)
              for n, c in ((n, _last_exit(spec, n)) for n in range(1, N_SCAN + 1))]
    return int(np.argmax(ratios)) + 1


def n_of_a(spec: JumpSpec, a: float, a_max: float = 1.0) -> int:
    """Heavy-traffic time scale ``n(a)`` with ``a n(a) ~ c_{n(a)}``.

    First ``n`` at or after the peak of ``c_n / n`` with ``c_n <= a n``.
    """
    if not (0.0 < a < a_max):
        raise ConfigError(f"drift a must lie in (0, {a_max}), got {a!r}")
    start = _regime_start(spec)
    for n in range(start, N_SCAN + 1):
        if not _above(spec, n, a):
            return n
    lo, hi = N_SCAN, 2 * N_SCAN
    while _above(spec, hi, a):
        lo, hi = hi, 2 * hi
        if hi > N_MAX:
            raise BracketError(f"no crossing c_n <= a n below n={N_MAX:g} for a={a:g}; "
                               "a too small for tabulation")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _above(spec, mid, a):
            lo = mid
        else:
            hi = mid
    return hi


def drift_scale(spec: JumpSpec, a: float) -> tuple[int, float]:
    """``(n(a), c_{n(a)})``."""
    n = n_of_a(spec, a)
    return n, c_of_n(spec, n)


@dataclass
class NormalizationTable:
    """``c_n`` on a geometric grid plus cached ``n(a)`` solves for one spec."""

    spec: JumpSpec
    entries: list = field(default_factory=list)
    drift_cache: dict = field(default_factory=dict)

    @property
    def alpha(self):
        return self.spec.alpha

    @classmethod
    def build(cls, spec, n_min=10 ** 3, n_max=10 ** 7, ratio=1.1):
        ns = []
        n = float(n_min)
        while n <= n_max * (1 + 1e-12):
            k = int(round(n))
            if not ns or k > ns[-1]:
                ns.append(k)
            n *= ratio
        if ns[-1] != int(n_max):
            ns.append(int(n_max))
        return cls(spec, [(k, c_of_n(spec, k)) for k in ns])

    @property
    def ns(self):
        return np.array([e[0] for e in self.entries], dtype=float)

    @property
    def cs(self):
        return np.array([e[1] for e in self.entries])

    def c_at(self, n):
        """Log-log linear (hence monotone) interpolation of the table."""
        ns, cs = self.ns, self.cs
        if not ns[0] <= n <= ns[-1]:
            return c_of_n(self.spec, int(round(n)))
        return float(np.exp(np.interp(math.log(n), np.log(ns), np.log(cs))))

    def n_of_a(self, a):
        if a not in self.drift_cache:
            self.drift_cache[a] = n_of_a(self.spec, a)
        return self.drift_cache[a]

    def defining_ratio(self):
        """``n V(c_n) / c_n^2`` for every entry."""
        return np.array([n * truncated_second_moment(self.spec, c) / c ** 2
                         for n, c in self.entries])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "c_n"])
            for n, c in self.entries:
                w.writerow([n, f"{c:.17g}"])

    def write_drift_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "n_of_a", "c_of_n_of_a"])
            for a in sorted(self.drift_cache):
                n = self.drift_cache[a]
                w.writerow([f"{a:.17g}", n, f"{c_of_n(self.spec, n):.17g}"])


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def rv_slope_check(table: NormalizationTable, a_lo=0.01, a_hi=0.1, n_a=6):
    """Regular-variation slopes ``(d log c_n / d log n, d log n(a) / d log a)``.

    Expected values are ``1/alpha`` and ``-alpha/(alpha - 1)``.
    """
    ns = table.ns
    if len(ns) < 3 or ns[-1] / ns[0] < 1e3 * (1 - 1e-9):
        raise ConfigError("table must span at least three decades of n")
    if not a_hi / a_lo >= 10 * (1 - 1e-9):
        raise ConfigError("drift grid must span at least a decade")
    slope_c = _slope(ns, table.cs)
    grid = np.geomspace(a_lo, a_hi, n_a)
    slope_n = _slope(grid, [table.n_of_a(float(a)) for a in grid])
    return slope_c, slope_n
