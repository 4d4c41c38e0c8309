"""Monte Carlo plumbing: chunked substreams, ordered worker pools, budgets.

Trials are split into fixed-size chunks.  Chunk ``i`` of a run seeded with
``seed`` draws from ``SeedSequence(seed, spawn_key=(i,))`` so results depend
on (seed, chunk layout) only, never on how many workers ran the chunks.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import BudgetExceeded, ConfigError

CHUNK_PATHS = 4096
BLOCK_ELEMS = 1 << 19
DEFAULT_STEP_BUDGET = 10 ** 10
WORKERS_ENV = "HEAVYTRAFFIC_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def chunk_sizes(trials: int, chunk: int = CHUNK_PATHS) -> list[int]:
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    full, rest = divmod(trials, chunk)
    return [chunk] * full + ([rest] if rest else [])


def chunk_rngs(seed: int, index: int, streams: int = 2):
    """Independent generators for one chunk (jumps, perturbation, ...)."""
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1), spawn_key=(index,))
    return [np.random.default_rng(child) for child in ss.spawn(streams)]


def map_ordered(fn, tasks):
    """``[fn(t) for t in tasks]``, run in a process pool when workers > 1."""
    tasks = list(tasks)
    n = min(worker_count(), len(tasks))
    if n <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))


def check_budget(steps, budget=None, hint=""):
    budget = DEFAULT_STEP_BUDGET if budget is None else budget
    if steps > budget:
        raise BudgetExceeded(steps, budget, hint)


def walk_blocks(spec, a, horizon, n_paths, rng, perturbation=None, prng=None):
    """Stream the drifted walk ``S_k - k a`` (plus perturbation) block by block.

    Yields ``(k0, S)`` with ``S[i, p]`` the walk of path ``p`` at step
    ``k0 + i`` (time-major, so a shorter horizon consumes a prefix of the
    same random stream).  ``S`` is reused between iterations.
    """
    block = max(1, BLOCK_ELEMS // n_paths)
    carry = np.zeros(n_paths)
    comp = np.zeros(n_paths)
    k0 = 1
    while k0 <= horizon:
        b = min(block, horizon - k0 + 1)
        x = spec.draw(rng, (b, n_paths))
        if a:
            x -= a
        if perturbation is not None:
            x += perturbation.draw(prng, (b, n_paths))
        np.cumsum(x, axis=0, out=x)
        total = x[-1].copy()
        x += carry
        # compensated carry keeps long paths free of rounding drift
        y = total - comp
        t = carry + y
        comp = (t - carry) - y
        carry = t
        yield k0, x
        k0 += b


def walk_extrema(spec, a, edges, n_paths, rng, perturbation=None, prng=None):
    """Per-path segment maxima of the drifted walk.

    ``edges = [e0, e1, ..., em]`` (strictly increasing, ``e0 >= 0``) defines
    segments ``k in (e_j, e_{j+1}]``.  Returns ``(seg_max, run_max, argmax,
    final)`` where ``run_max``/``argmax`` cover ``0 <= k <= em`` with
    ``S_0 = 0`` included.
    """
    edges = np.asarray(edges, dtype=np.int64)
    m = len(edges) - 1
    seg_max = np.full((n_paths, m), -np.inf)
    run_max = np.zeros(n_paths)
    argmax = np.zeros(n_paths, dtype=np.int64)
    final = np.zeros(n_paths)
    horizon = int(edges[-1])
    for k0, s in walk_blocks(spec, a, horizon, n_paths, rng, perturbation, prng):
        k1 = k0 + s.shape[0] - 1
        bmax = s.max(axis=0)
        better = bmax > run_max
        if better.any():
            barg = s[:, better].argmax(axis=0)
            run_max[better] = bmax[better]
            argmax[better] = k0 + barg
        for j in range(m):
            lo, hi = max(edges[j] + 1, k0), min(edges[j + 1], k1)
            if lo > hi:
                continue
            part = bmax if (lo == k0 and hi == k1) else s[lo - k0:hi - k0 + 1].max(axis=0)
            np.maximum(seg_max[:, j], part, out=seg_max[:, j])
        final = s[-1]
    return seg_max, run_max, argmax, final.copy()
