"""Optional SVG figures.  Every acceptance check reads CSV, never these."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so reruns give identical files
plt.rcParams["svg.hashsalt"] = "heavytraffic"
plt.rcParams["svg.fonttype"] = "none"

FIG_SIZE = (6.0, 4.0)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def ecdf_overlay(path, curves, law=None, law_label="limit law", xlabel="x", logx=False):
    """ECDFs from ``curves`` (label -> sorted samples) against a reference CDF."""
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    hi = 0.0
    for label, x in curves.items():
        x = np.asarray(x)
        y = np.arange(1, x.size + 1) / x.size
        ax.step(x, y, where="post", lw=1.0, label=label)
        hi = max(hi, float(np.quantile(x, 0.995)))
    if law is not None:
        grid = np.geomspace(max(hi, 1e-9) * 1e-4, hi, 400) if logx else np.linspace(0, hi, 400)
        ax.plot(grid, law(grid), "k--", lw=1.2, label=law_label)
    if logx:
        ax.set_xscale("log")
    ax.set_xlim(right=hi)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def loglog(path, series, xlabel, ylabel, reference_slope=None):
    """Log-log lines for ``series`` (label -> (x, y)), with an optional slope guide."""
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    for label, (x, y) in series.items():
        ax.loglog(x, y, "o-", ms=3, lw=1.0, label=label)
    if reference_slope is not None and series:
        x, y = next(iter(series.values()))
        x = np.asarray(x, dtype=float)
        ax.loglog(x, y[0] * (x / x[0]) ** reference_slope, "k:", lw=1.0,
                  label=f"slope {reference_slope:g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)
