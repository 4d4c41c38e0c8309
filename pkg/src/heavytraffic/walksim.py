"""Simulation of drifted walk maxima with truncation certificates.

The object of interest is ``M^(a) = sup_k (S_k - k a)``.  It is simulated
on the finite horizon ``K = ceil(T n(a))``; the part of the supremum beyond
the horizon is accounted for by :func:`truncation_certificate`, a dyadic
bound skeleton, and probed directly by :func:`truncation_tail_probe`.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import mc
from .errors import ConfigError
from .jumps import JumpSpec, truncated_second_moment
from .normalize import c_of_n, n_of_a


@dataclass(frozen=True)
class PerturbationSpec:
    """Zero-mean additive noise ``Y_i`` overlaid on each increment.

    ``law`` is ``"uniform"`` (uniform on ``[-b, b]``) or ``"rademacher"``
    (``+-b``).  ``gamma_moment`` is the exponent whose absolute moment is
    asserted finite; both catalog laws are bounded so any value works.
    """

    law: str = "uniform"
    b: float = 1.0
    gamma_moment: float = 4.0

    def __post_init__(self):
        if self.law not in ("uniform", "rademacher"):
            raise ConfigError(f"perturbation law must be uniform or rademacher, got {self.law!r}")
        if not self.b > 0:
            raise ConfigError(f"perturbation scale b must be positive, got {self.b!r}")

    @property
    def variance(self):
        return self.b ** 2 / 3.0 if self.law == "uniform" else self.b ** 2

    def abs_moment(self, gamma=None):
        g = self.gamma_moment if gamma is None else gamma
        if self.law == "uniform":
            return self.b ** g / (g + 1.0)
        return self.b ** g

    def draw(self, rng, shape):
        u = rng.random(shape)
        if self.law == "uniform":
            return self.b * (2.0 * u - 1.0)
        return np.where(u < 0.5, -self.b, self.b)


@dataclass
class WalkConfig:
    spec: JumpSpec
    a: float
    T: float = 20.0
    trials: int = 10 ** 4
    seed: int = 0
    perturbation: PerturbationSpec | None = None
    # explicit step horizon; required when the drift lives inside the spec
    horizon: int | None = None
    max_steps: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.horizon is None:
            if not self.a > 0:
                raise ConfigError(f"drift a must be positive, got {self.a!r}")
            if not self.T >= 1:
                raise ConfigError(f"horizon multiplier T must be >= 1, got {self.T!r}")
            if not self.spec.centered:
                raise ConfigError(f"{self.spec} is not centered; give an explicit horizon")
        elif self.horizon < 1 or self.a < 0:
            raise ConfigError("horizon must be >= 1 and drift nonnegative")

    def scale(self):
        """``(n(a), c_{n(a)})`` or ``(None, None)`` for oracle runs."""
        if not self.spec.centered or self.a == 0:
            return None, None
        n = n_of_a(self.spec, self.a)
        return n, c_of_n(self.spec, n)

    def steps(self):
        if self.horizon is not None:
            return int(self.horizon)
        n, _ = self.scale()
        return int(math.ceil(self.T * n))


@dataclass
class MaxSampleBatch:
    samples: np.ndarray
    K: int
    a: float
    spec: JumpSpec
    seed: int
    n_a: int | None
    c_n_a: float | None
    truncation_certificate: float
    argmax: np.ndarray
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def argmax_ratios(self):
        return self.argmax / self.n_a if self.n_a else self.argmax.astype(float)

    def scaled(self):
        if not self.c_n_a:
            raise ConfigError("batch has no normalization (oracle run)")
        return self.samples / self.c_n_a

    def write_csv(self, path):
        ratios = self.argmax_ratios
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "argmax_ratio"])
            for s, r in zip(self.samples, ratios):
                w.writerow([f"{s:.17g}", f"{r:.17g}"])

    def manifest(self):
        return {
            "config": self.config,
            "spec": self.spec.to_block(),
            "a": self.a,
            "seed": self.seed,
            "K": self.K,
            "n_of_a": self.n_a,
            "c_of_n_of_a": self.c_n_a,
            "truncation_certificate": self.truncation_certificate,
            "wall_time_s": self.wall_time,
        }

    def write_manifest(self, path):
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)


def _extrema_task(task):
    spec, a, edges, n_paths, seed, index, pert = task
    rng, prng = mc.chunk_rngs(seed, index)
    return mc.walk_extrema(spec, a, edges, n_paths, rng, pert, prng)


def _run_extrema(cfg: WalkConfig, edges, hint):
    steps = int(edges[-1])
    mc.check_budget(float(steps) * cfg.trials, cfg.max_steps, hint)
    tasks = [(cfg.spec, cfg.a, edges, p, cfg.seed, i, cfg.perturbation)
             for i, p in enumerate(mc.chunk_sizes(cfg.trials))]
    parts = mc.map_ordered(_extrema_task, tasks)
    seg = np.concatenate([p[0] for p in parts])
    run_max = np.concatenate([p[1] for p in parts])
    argmax = np.concatenate([p[2] for p in parts])
    final = np.concatenate([p[3] for p in parts])
    return seg, run_max, argmax, final


def simulate_max_batch(cfg: WalkConfig) -> MaxSampleBatch:
    """Sample ``max_{0<=k<=K} S_k^(a)`` for ``cfg.trials`` independent paths."""
    t0 = time.perf_counter()
    n, c = cfg.scale()
    K = cfg.steps()
    _, run_max, argmax, _ = _run_extrema(
        cfg, [0, K], "reduce trials or T, or raise the step budget")
    cert = truncation_certificate(cfg) if n is not None else 0.0
    return MaxSampleBatch(
        samples=run_max, K=K, a=cfg.a, spec=cfg.spec, seed=cfg.seed, n_a=n,
        c_n_a=c, truncation_certificate=cert, argmax=argmax,
        wall_time=time.perf_counter() - t0,
        config={"T": cfg.T, "trials": cfg.trials, "horizon": cfg.horizon,
                "perturbation": None if cfg.perturbation is None else
                {"law": cfg.perturbation.law, "b": cfg.perturbation.b}})


def dyadic_bound(spec: JumpSpec, a: float, n: int, T: float, tol=1e-12, max_terms=10 ** 5):
    """``sum_j 2^(j+1) n T V(2^j a n T) / (2^j a n T)^2`` (constant set to 1)."""
    total = 0.0
    base = a * n * T
    for j in range(max_terms):
        x = base * 2.0 ** j
        term = 2.0 ** (j + 1) * n * T * truncated_second_moment(spec, x) / (x * x)
        total += term
        if term < tol:
            return total
    raise ConfigError(f"dyadic certificate sum did not converge for {spec}; is V misdeclared?")


def truncation_certificate(cfg: WalkConfig) -> float:
    """Dyadic skeleton bounding ``P(max_{k >= T n(a)} S_k^(a) >= 0)`` up to a constant."""
    n, _ = cfg.scale()
    if n is None:
        raise ConfigError("truncation certificate needs a centered spec with drift a > 0")
    return dyadic_bound(cfg.spec, cfg.a, n, cfg.T)


@dataclass
class ProbeResult:
    T_lo: np.ndarray
    T_hi: float
    p_hat: np.ndarray
    stderr: np.ndarray
    trials: int


def truncation_tail_probe_sweep(cfg: WalkConfig, T_los, T_hi) -> ProbeResult:
    """Estimate ``P(max_{T_lo n <= k <= T_hi n} S_k^(a) >= 0)`` for several ``T_lo``.

    All ``T_lo`` values share the same simulated paths.
    """
    T_los = np.sort(np.asarray(T_los, dtype=float))
    if T_los[0] < 1 or T_los[-1] >= T_hi:
        raise ConfigError("need 1 <= T_lo < T_hi")
    n, _ = cfg.scale()
    starts = [int(math.ceil(t * n)) for t in T_los]
    K = int(math.floor(T_hi * n))
    edges = [s - 1 for s in starts] + [K]
    seg, *_ = _run_extrema(cfg, edges, "reduce trials or T_hi")
    # suffix maxima: segment j onward covers k >= starts[j]
    suffix = np.maximum.accumulate(seg[:, ::-1], axis=1)[:, ::-1]
    hits = (suffix >= 0).mean(axis=0)
    se = np.sqrt(hits * (1 - hits) / cfg.trials)
    return ProbeResult(T_los, float(T_hi), hits, se, cfg.trials)


def truncation_tail_probe(cfg: WalkConfig, T_lo, T_hi):
    """``(estimate, binomial stderr)`` for a single window."""
    res = truncation_tail_probe_sweep(cfg, [T_lo], T_hi)
    return float(res.p_hat[0]), float(res.stderr[0])


# --------------------------------------------------------------------------
# GI/M/1 oracle
# --------------------------------------------------------------------------

def gim1_sigma(beta, shift, tol=1e-12, max_iter=100000):
    """Root in (0, 1) of ``s = exp(-shift beta (1 - s)) / (2 - s)``.

    That is ``s = A(beta (1 - s))`` for interarrival ``shift + Exp(beta)``;
    fixed-point iteration from 0 increases monotonically to the root.
    """
    if not shift > 0:
        raise ConfigError("shift must be positive; at shift = 0 the maximum is infinite")
    if not beta > 0:
        raise ConfigError("beta must be positive")
    s = 0.0
    for _ in range(max_iter):
        nxt = math.exp(-shift * beta * (1.0 - s)) / (2.0 - s)
        if abs(nxt - s) < tol:
            return nxt
        s = nxt
    raise ConfigError("GI/M/1 fixed point did not converge")


def exact_gim1_tail(beta, shift, x):
    """``P(M > x) = s e^{-beta (1 - s) x}`` for the GI/M/1 walk maximum."""
    s = gim1_sigma(beta, shift)
    return s * np.exp(-beta * (1.0 - s) * np.asarray(x, dtype=float))


def gim1_laplace(beta, shift, lam):
    """``E exp(-lam M)``: atom ``1 - s`` at zero plus an exponential tail."""
    s = gim1_sigma(beta, shift)
    r = beta * (1.0 - s)
    lam = np.asarray(lam, dtype=float)
    return (1.0 - s) + s * r / (r + lam)
