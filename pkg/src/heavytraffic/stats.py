"""Empirical-distribution utilities shared by the verification suites."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    samples: np.ndarray
    tag: str = ""

    def __post_init__(self):
        x = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if x.size < 1:
            raise ConfigError("empirical distribution needs at least one sample")
        object.__setattr__(self, "samples", x)

    @classmethod
    def from_samples(cls, samples, tag=None):
        x = np.asarray(samples, dtype=float)
        if tag is None:
            tag = hashlib.sha256(np.sort(x.ravel()).tobytes()).hexdigest()[:16]
        return cls(x, tag)

    @property
    def count(self):
        return self.samples.size

    def quantile(self, q):
        return np.quantile(self.samples, q)

    def write_csv(self, path, grid):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "ecdf"])
            for x, f in zip(grid, ecdf_eval(self, grid)):
                w.writerow([f"{x:.17g}", f"{f:.17g}"])


def ecdf_eval(d: EmpiricalDistribution, x):
    """Fraction of samples ``<= x`` (right-continuous)."""
    out = np.searchsorted(d.samples, x, side="right") / d.count
    return float(out) if np.ndim(out) == 0 else out


def ks_distance(d: EmpiricalDistribution, cdf) -> float:
    """``sup_x |F_n(x) - F(x)|`` for a continuous law ``F``.

    Both one-sided discrepancies are taken at the distinct sample points,
    which gives the exact supremum; tied samples contribute one jump.
    """
    u, counts = np.unique(d.samples, return_counts=True)
    hi = np.cumsum(counts) / d.count
    lo = hi - counts / d.count
    f = np.asarray(cdf(u), dtype=float)
    return float(max(np.max(hi - f), np.max(f - lo), 0.0))


def ks_two_sample(d1: EmpiricalDistribution, d2: EmpiricalDistribution) -> float:
    """``sup_x |F_1(x) - F_2(x)|`` over the pooled sample points."""
    pts = np.union1d(d1.samples, d2.samples)
    return float(np.max(np.abs(ecdf_eval(d1, pts) - ecdf_eval(d2, pts))))


def dkw_epsilon(n: int, delta: float) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band at level ``1 - delta``."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    if not 0 < delta < 2:
        raise ConfigError(f"delta must lie in (0, 2), got {delta!r}")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def empirical_laplace(d: EmpiricalDistribution, mu: float):
    """``(mean of exp(-mu X), standard error)``."""
    if mu == 0:
        return 1.0, 0.0
    v = np.exp(-mu * d.samples)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def loglog_slope(points):
    """Least-squares line through ``(log x, log y)``: ``(slope, intercept, r^2)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ConfigError("need at least two (x, y) points")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if ss == 0 else 1.0 - float(np.sum(resid ** 2) / ss)
    return float(slope), float(intercept), r2
