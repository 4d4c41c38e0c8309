"""Empirical check of the maximal inequality

    P(max_{k <= n} S_k >= x) <= C n V(x) / x^2

for the undrifted walk, with calibration of ``C`` and checks of its
ingredients (Karamata-type growth of ``V`` and the tail / truncated-mean
components of Pruitt's bound).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import mc
from .errors import ConfigError
from .jumps import JumpSpec, tail_probability, truncated_mean_abs, truncated_second_moment
from .normalize import c_of_n

RARE_BOUND = 1e-4


@dataclass
class InequalityReport:
    spec: JumpSpec
    n: np.ndarray
    x: np.ndarray
    x_over_cn: np.ndarray
    p_hat: np.ndarray
    stderr: np.ndarray
    bound: np.ndarray
    trials: int

    @property
    def ratio(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.bound > 0, self.p_hat / self.bound, 0.0)

    @property
    def rare(self):
        """Cells whose bound is below ``RARE_BOUND``; kept in the table, not in ``C_hat``."""
        return self.bound < RARE_BOUND

    @property
    def C_hat(self):
        keep = ~self.rare
        if not keep.any():
            raise ConfigError("every cell is a rare-event cell; no calibration possible")
        return float(self.ratio[keep].max())

    def variation_across_n(self):
        """``{x/c_n: max/min ratio over n}`` on the non-rare cells."""
        out = {}
        keep = ~self.rare
        for m in np.unique(self.x_over_cn):
            r = self.ratio[(self.x_over_cn == m) & keep]
            if r.size >= 2 and r.min() > 0:
                out[float(m)] = float(r.max() / r.min())
        return out

    def one_sided_upper(self, level=0.95):
        """Upper confidence limit of ``p`` for cells with no exceedance."""
        return -math.log(1.0 - level) / self.trials

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "x", "p_hat", "stderr", "bound", "ratio", "rare"])
            for i in range(self.n.size):
                w.writerow([int(self.n[i]), f"{self.x[i]:.17g}", f"{self.p_hat[i]:.17g}",
                            f"{self.stderr[i]:.17g}", f"{self.bound[i]:.17g}",
                            f"{self.ratio[i]:.17g}", int(self.rare[i])])


def _sweep_task(task):
    spec, edges, n_paths, seed, index = task
    rng, _ = mc.chunk_rngs(seed, index)
    seg, *_ = mc.walk_extrema(spec, 0.0, edges, n_paths, rng)
    # prefix maxima at each grid n
    return np.maximum.accumulate(seg, axis=1)


def maximal_ratio_sweep(spec: JumpSpec, n_grid, x_grid, trials, seed, relative=True,
                        max_steps=None) -> InequalityReport:
    """``P(max_{k<=n} S_k >= x)`` on a grid, all ``n`` sharing the same paths.

    With ``relative=True`` the ``x_grid`` entries are multiples of ``c_n``.
    """
    n_grid = sorted(int(n) for n in n_grid)
    x_grid = list(x_grid)
    if not n_grid or not x_grid:
        raise ConfigError("n_grid and x_grid must be nonempty")
    if n_grid[0] < 1 or any(x <= 0 for x in x_grid):
        raise ConfigError("need n >= 1 and x > 0")
    if not spec.centered:
        raise ConfigError(f"{spec} is not centered")
    mc.check_budget(float(n_grid[-1]) * trials, max_steps, "reduce trials or the largest n")
    edges = [0] + n_grid
    tasks = [(spec, edges, p, seed, i) for i, p in enumerate(mc.chunk_sizes(trials))]
    prefix = np.concatenate(mc.map_ordered(_sweep_task, tasks))
    rows = []
    for j, n in enumerate(n_grid):
        cn = c_of_n(spec, n)
        for m in x_grid:
            x = m * cn if relative else float(m)
            p = float((prefix[:, j] >= x).mean())
            rows.append((n, x, x / cn, p, math.sqrt(p * (1 - p) / trials),
                         n * truncated_second_moment(spec, x) / (x * x)))
    arr = np.array(rows, dtype=float)
    return InequalityReport(spec, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4],
                            arr[:, 5], trials)


def karamata_check(spec: JumpSpec, gamma, pairs):
    """``max [V(y)/V(x)] / (y/x)^(2 - alpha + gamma)`` over pairs ``y >= x``.

    Returns ``(ratio, (x, y))``.
    """
    alpha = spec.alpha
    if not 0 < gamma < alpha:
        raise ConfigError(f"need 0 < gamma < alpha, got {gamma}")
    best, arg = -math.inf, None
    for x, y in pairs:
        if not 0 < x <= y:
            raise ConfigError(f"need 0 < x <= y, got ({x}, {y})")
        vx = truncated_second_moment(spec, x)
        if vx <= 0:
            raise ConfigError(f"V({x}) = 0; pair outside V's computable range")
        r = truncated_second_moment(spec, y) / vx / (y / x) ** (2 - alpha + gamma)
        if r > best:
            best, arg = r, (x, y)
    return best, arg


@dataclass
class PruittRow:
    x: float
    tail_ratio: float
    mean_ratio: float


def pruitt_component_check(spec: JumpSpec, x_grid):
    """Per-``x`` ratios ``P(|X|>x) x^2 / V(x)`` and ``|E(X; |X|<=x)| x / V(x)``.

    Returns ``(rows, bounded)`` where ``bounded`` says both ratios stay
    within 1.5 times their value at the grid's geometric midpoint.
    """
    if not spec.centered:
        raise ConfigError(f"{spec} is not centered")
    xs = np.asarray(sorted(x_grid), dtype=float)
    if xs.size == 0 or xs[0] <= 0:
        raise ConfigError("x_grid must be nonempty and positive")
    rows = []
    for x in xs:
        v = truncated_second_moment(spec, x)
        if v <= 0:
            raise ConfigError(f"V({x}) = 0; x below the support")
        rows.append(PruittRow(float(x), tail_probability(spec, x) * x * x / v,
                              truncated_mean_abs(spec, x) * x / v))
    mid = math.exp(0.5 * (math.log(xs[0]) + math.log(xs[-1])))
    ref = min(rows, key=lambda r: abs(math.log(r.x / mid)))
    bounded = all(r.tail_ratio <= 1.5 * ref.tail_ratio + 1e-12 and
                  r.mean_ratio <= 1.5 * ref.mean_ratio + 1e-12 for r in rows)
    return rows, bounded
