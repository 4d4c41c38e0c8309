"""Spitzer series for the Laplace transform of the scaled walk maximum.

For the drifted walk the Wiener-Hopf factorization gives

    E exp(-mu M / c) = exp(-sum_k t_k),
    t_k = (1/k) E(1 - exp(-mu S_k / c); S_k > 0),

with ``c = c_{n(a)}``.  The terms are estimated by Monte Carlo with every
simulated path feeding every ``k`` and the sum split at ``eps n(a)`` and
``T n(a)``: Sigma1 (small k), Sigma2 (bulk) and Sigma3 (tail, bounded
analytically and never summed).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import mc
from .errors import ConfigError
from .jumps import JumpSpec, truncated_second_moment
from .limits import limit_integrand_mc
from .normalize import c_of_n, n_of_a
from .stats import EmpiricalDistribution, empirical_laplace
from .walksim import WalkConfig, simulate_max_batch, truncation_certificate


@dataclass
class SpitzerConfig:
    spec: JumpSpec
    a: float
    mu_grid: tuple = (0.5, 1.0, 2.0)
    eps: float = 0.1
    T: float = 30.0
    trials: int = 10 ** 4
    seed: int = 0
    max_steps: float | None = None

    def __post_init__(self):
        self.mu_grid = tuple(float(m) for m in self.mu_grid)
        if not self.mu_grid:
            raise ConfigError("mu_grid must be nonempty")
        if any(m < 0 for m in self.mu_grid):
            raise ConfigError("mu values must be >= 0")
        if not 0 < self.eps < 1 < self.T:
            raise ConfigError(f"need 0 < eps < 1 < T, got eps={self.eps}, T={self.T}")
        if not self.a > 0:
            raise ConfigError("drift a must be positive")
        if self.trials < 2:
            raise ConfigError("trials must be >= 2")
        if not self.spec.centered:
            raise ConfigError(f"{self.spec} is not centered")


@dataclass
class SpitzerResult:
    config: SpitzerConfig
    n_a: int
    c_n_a: float
    K: int
    # t[k-1, j] for mu_grid[j]
    t: np.ndarray
    t_stderr: np.ndarray
    p_positive: np.ndarray
    positive_mean: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma1_stderr: np.ndarray
    sum_stderr: np.ndarray
    laplace: np.ndarray = field(init=False)
    laplace_stderr: np.ndarray = field(init=False)

    def __post_init__(self):
        total = self.sigma1 + self.sigma2
        self.laplace = np.exp(-total)
        self.laplace_stderr = self.laplace * self.sum_stderr

    @property
    def mu_grid(self):
        return self.config.mu_grid

    @property
    def eps_index(self):
        """Number of terms in Sigma1 (``k <= eps n(a)``)."""
        return min(int(math.floor(self.config.eps * self.n_a)), self.K)

    def partial_laplace(self, j):
        """``exp(-sum_{k <= m} t_k)`` for ``m = 1..K`` at ``mu_grid[j]``."""
        return np.exp(-np.cumsum(self.t[:, j]))

    def write_terms_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k"] + [f"t_k_mu={m:g}" for m in self.mu_grid])
            for k in range(self.K):
                w.writerow([k + 1] + [f"{v:.17g}" for v in self.t[k]])

    def write_summary_csv(self, path, sigma3=None):
        s3 = sigma3_bound(self.config.spec, self.config.a, self.n_a, self.config.T) \
            if sigma3 is None else sigma3
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mu", "laplace", "stderr", "sigma1", "sigma2", "sigma3_bound"])
            for j, m in enumerate(self.mu_grid):
                w.writerow([f"{m:.17g}", f"{self.laplace[j]:.17g}",
                            f"{self.laplace_stderr[j]:.17g}", f"{self.sigma1[j]:.17g}",
                            f"{self.sigma2[j]:.17g}", f"{s3:.17g}"])


def _terms_chunk(task):
    spec, a, K, split, mus, c, n_paths, seed, index = task
    rng, _ = mc.chunk_rngs(seed, index)
    m = len(mus)
    g_sum = np.zeros((K, m))
    g_sq = np.zeros((K, m))
    pos = np.zeros(K)
    pos_mean = np.zeros(K)
    path1 = np.zeros((n_paths, m))
    path2 = np.zeros((n_paths, m))
    for k0, s in mc.walk_blocks(spec, a, K, n_paths, rng):
        b = s.shape[0]
        ks = np.arange(k0, k0 + b)
        inv_k = 1.0 / ks
        sp = np.maximum(s, 0.0)
        pos[k0 - 1:k0 - 1 + b] = (s > 0).sum(axis=1)
        pos_mean[k0 - 1:k0 - 1 + b] = sp.sum(axis=1)
        in1 = ks <= split
        for j, mu in enumerate(mus):
            g = -np.expm1(-(mu / c) * sp)
            g_sum[k0 - 1:k0 - 1 + b, j] = g.sum(axis=1)
            g_sq[k0 - 1:k0 - 1 + b, j] = (g * g).sum(axis=1)
            wg = g * inv_k[:, None]
            if in1.all():
                path1[:, j] += wg.sum(axis=0)
            elif not in1.any():
                path2[:, j] += wg.sum(axis=0)
            else:
                path1[:, j] += wg[in1].sum(axis=0)
                path2[:, j] += wg[~in1].sum(axis=0)
    return g_sum, g_sq, pos, pos_mean, path1, path2


def estimate_terms(cfg: SpitzerConfig) -> SpitzerResult:
    """Monte Carlo ``t_k`` for ``k <= ceil(T n(a))`` and every ``mu``.

    Each path contributes to all ``k``; the standard error of the sums is
    taken from the per-path partial sums, which carries the covariance
    between terms.
    """
    n = n_of_a(cfg.spec, cfg.a)
    c = c_of_n(cfg.spec, n)
    K = int(math.ceil(cfg.T * n))
    mc.check_budget(float(K) * cfg.trials, cfg.max_steps, "reduce trials or T")
    split = int(math.floor(cfg.eps * n))
    tasks = [(cfg.spec, cfg.a, K, split, cfg.mu_grid, c, p, cfg.seed, i)
             for i, p in enumerate(mc.chunk_sizes(cfg.trials))]
    parts = mc.map_ordered(_terms_chunk, tasks)
    P = cfg.trials
    g_sum = sum(p[0] for p in parts)
    g_sq = sum(p[1] for p in parts)
    pos = sum(p[2] for p in parts)
    pos_mean = sum(p[3] for p in parts)
    path1 = np.concatenate([p[4] for p in parts])
    path2 = np.concatenate([p[5] for p in parts])
    ks = np.arange(1, K + 1)[:, None]
    mean = g_sum / P
    var = np.maximum(g_sq / P - mean * mean, 0.0) * P / (P - 1)
    t = mean / ks
    t_se = np.sqrt(var / P) / ks
    both = path1 + path2
    return SpitzerResult(
        config=cfg, n_a=n, c_n_a=c, K=K, t=t, t_stderr=t_se,
        p_positive=pos / P, positive_mean=pos_mean / P,
        sigma1=t[:split].sum(axis=0), sigma2=t[split:].sum(axis=0),
        sigma1_stderr=path1.std(axis=0, ddof=1) / math.sqrt(P),
        sum_stderr=both.std(axis=0, ddof=1) / math.sqrt(P))


def sigma3_bound(spec: JumpSpec, a: float, n: int, T: float) -> float:
    """``sum_{k > T n} V(k a) / (k a)^2`` by integral comparison.

    ``(1/a) int_{a floor(T n)}^inf V(x) / x^2 dx``, which dominates the sum
    whenever ``V(x)/x^2`` is nonincreasing beyond ``a T n``.
    """
    lo = a * math.floor(T * n)
    f = lambda lx: truncated_second_moment(spec, math.exp(lx)) / math.exp(lx)
    total, start, width = 0.0, math.log(lo), 4.0
    while True:
        part = integrate.quad(f, start, start + width, epsabs=1e-14, epsrel=1e-10, limit=200)[0]
        total += part
        start += width
        if part < 1e-12 * max(total, 1e-300) or start > math.log(lo) + 400:
            break
    return total / a


def sigma_split_report(result: SpitzerResult, alpha=None):
    """``(sigma1, sigma2, sigma3_bound)``; the first two are arrays over mu."""
    cfg = result.config
    return (result.sigma1.copy(), result.sigma2.copy(),
            sigma3_bound(cfg.spec, cfg.a, result.n_a, cfg.T))


def resum_sigma1(result: SpitzerResult, eps):
    """Sigma1 at a smaller ``eps`` from the stored terms (no new simulation)."""
    if not 0 < eps <= result.config.eps:
        raise ConfigError("eps must lie in (0, config eps]")
    m = int(math.floor(eps * result.n_a))
    return result.t[:m].sum(axis=0)


@dataclass
class IntegrandRow:
    v: float
    k: int
    scaled_term: float
    scaled_stderr: float
    limit_integrand: float
    limit_stderr: float

    @property
    def diff(self):
        return self.scaled_term - self.limit_integrand

    @property
    def joint_stderr(self):
        return math.hypot(self.scaled_stderr, self.limit_stderr)


def integrand_limit_compare(result: SpitzerResult, v_points, mu_index=0,
                            limit_samples=10 ** 6, seed=0):
    """Rows comparing ``n(a) t_k`` (``k = round(v n(a))``) with the limit integrand."""
    mu = result.mu_grid[mu_index]
    spec = result.config.spec
    rows = []
    for i, v in enumerate(v_points):
        k = int(round(v * result.n_a))
        if not 1 <= k <= result.K:
            raise ConfigError(f"v={v} maps to k={k} outside the horizon 1..{result.K}")
        lim, lse = (0.0, 0.0) if mu == 0 else limit_integrand_mc(
            v, mu, spec.alpha, spec.limit_skew, limit_samples, seed + i)
        rows.append(IntegrandRow(v, k, result.n_a * result.t[k - 1, mu_index],
                                 result.n_a * result.t_stderr[k - 1, mu_index], lim, lse))
    return rows


@dataclass
class ConsistencyRow:
    mu: float
    series: float
    series_stderr: float
    empirical: float
    empirical_stderr: float
    sigma3: float
    certificate: float

    @property
    def diff(self):
        return abs(self.series - self.empirical)

    @property
    def stderr(self):
        return math.hypot(self.series_stderr, self.empirical_stderr)

    @property
    def passed(self):
        return self.diff <= 3 * self.stderr + self.sigma3 + self.certificate


def wiener_hopf_consistency(cfg: SpitzerConfig, max_seed=None, result=None):
    """Series ``exp(-sum t_k)`` against the empirical transform of simulated maxima.

    The maxima are simulated on the same horizon with an independent seed
    (``max_seed``, default ``seed + 1``).  Returns ``(rows, result, batch)``.
    """
    result = estimate_terms(cfg) if result is None else result
    wcfg = WalkConfig(cfg.spec, cfg.a, T=cfg.T, trials=cfg.trials,
                      seed=cfg.seed + 1 if max_seed is None else max_seed,
                      max_steps=cfg.max_steps)
    batch = simulate_max_batch(wcfg)
    d = EmpiricalDistribution.from_samples(batch.scaled())
    s3 = sigma3_bound(cfg.spec, cfg.a, result.n_a, cfg.T)
    cert = truncation_certificate(wcfg)
    rows = []
    for j, mu in enumerate(cfg.mu_grid):
        emp, ese = empirical_laplace(d, mu)
        if mu == 0:
            rows.append(ConsistencyRow(mu, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0))
            continue
        rows.append(ConsistencyRow(mu, float(result.laplace[j]), float(result.laplace_stderr[j]),
                                   emp, ese, s3, cert))
    return rows, result, batch


def write_consistency_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "series", "series_stderr", "empirical", "empirical_stderr",
                    "sigma3_bound", "certificate", "pass"])
        for r in rows:
            w.writerow([f"{r.mu:.17g}", f"{r.series:.17g}", f"{r.series_stderr:.17g}",
                        f"{r.empirical:.17g}", f"{r.empirical_stderr:.17g}",
                        f"{r.sigma3:.17g}", f"{r.certificate:.17g}", int(r.passed)])


def rademacher_exact_terms(a, c, mu, k_max):
    """Exact ``t_k`` for the Rademacher walk by binomial convolution (``k <= 64``)."""
    from scipy.stats import binom
    if k_max > 64:
        raise ConfigError("exact convolution is reserved for k <= 64")
    out = np.zeros(k_max)
    for k in range(1, k_max + 1):
        j = np.arange(k + 1)
        s = 2.0 * j - k - k * a
        w = binom.pmf(j, k, 0.5)
        g = np.where(s > 0, -np.expm1(-mu * np.maximum(s, 0.0) / c), 0.0)
        out[k - 1] = float(np.dot(w, g)) / k
    return out

