"""Command-line front end.

    heavytraffic <command> --config <path> [--out DIR] [--seed N] [--svg] [--max-steps N]

Commands: normalize, limit, spitzer, inequality, mstar.  Each writes CSV
tables and a ``manifest.json`` into the output directory.  Exit status is
0 when every pass flag holds, 1 when any fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, RunConfig, load_config
from .errors import BracketError, BudgetExceeded, ConfigError, HeavyTrafficError
from .jumps import ServiceMinusShiftedArrival
from .limits import (MittagLeffler, QuadratureWindow, calibrate_ml_scale, mittag_leffler_scale,
                     mstar_laplace_mc, mstar_sup_mc, spectrally_negative_rate,
                     standardized_exponential_cdf)
from .normalize import NormalizationTable, rv_slope_check
from .report import write_csv, write_manifest
from .stats import EmpiricalDistribution, dkw_epsilon, ecdf_eval, ks_distance, ks_two_sample
from .walksim import WalkConfig, exact_gim1_tail, gim1_sigma, simulate_max_batch

log = logging.getLogger("heavytraffic")

DKW_DELTA = 0.01


class Run:
    """Output directory, file list, metrics and pass flags of one command."""

    def __init__(self, cfg: RunConfig, out, svg, max_steps):
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.svg = svg
        self.max_steps = max_steps
        self.files = []
        self.metrics = {}
        self.flags = {}

    def path(self, name):
        p = self.out / name
        self.files.append(p)
        return p

    def csv(self, name, header, rows):
        return write_csv(self.path(name), header, rows)

    def flag(self, name, ok):
        self.flags[name] = bool(ok)


# --------------------------------------------------------------------------
# normalize
# --------------------------------------------------------------------------

def cmd_normalize(run: Run):
    cfg = run.cfg
    spec = cfg.spec
    grid = cfg.require("a")
    table = NormalizationTable.build(spec, cfg.get("n_min", 1e3), cfg.get("n_max", 1e7),
                                     cfg.get("ratio", 1.1))
    for a in grid:
        table.n_of_a(a)
    table.write_csv(run.path("cn.csv"))
    table.write_drift_csv(run.path("drift.csv"))
    ratio = table.defining_ratio()
    run.metrics.update(defining_ratio_min=float(ratio.min()), defining_ratio_max=float(ratio.max()),
                       alpha=spec.alpha, n_of_a={str(a): table.n_of_a(a) for a in grid})
    if spec.continuous_v:
        run.flag("defining_ratio", np.all(np.abs(ratio - 1) <= cfg.tol("defining_ratio")))
    if table.ns[-1] / table.ns[0] >= 1e3 * (1 - 1e-9):
        slope_c, slope_n = rv_slope_check(table)
        run.metrics.update(slope_c=slope_c, slope_n=slope_n)
        run.flag("slope_c", abs(slope_c - 1 / spec.alpha) <= cfg.tol("slope_c"))
        run.flag("slope_n", abs(slope_n + spec.alpha / (spec.alpha - 1)) <= cfg.tol("slope_n"))
    if run.svg:
        from . import plotting
        plotting.loglog(run.path("cn.svg"), {"c_n": (table.ns, table.cs)}, "n", "c_n",
                        reference_slope=1 / spec.alpha)


# --------------------------------------------------------------------------
# limit
# --------------------------------------------------------------------------

def _limit_reference(spec, T, trials, seed, grid_steps, max_steps):
    """``(label, cdf or None, reference distribution or None)`` for the scaled maximum."""
    alpha = spec.alpha
    if alpha == 2.0:
        return "Exp(2)", standardized_exponential_cdf, None
    if spec.limit_skew == "spectrally-positive":
        c = mittag_leffler_scale(alpha)
        return f"Mittag-Leffler(c={c:.6g})", MittagLeffler(alpha, c).cdf, None
    ref = mstar_sup_mc(alpha, spec.limit_skew, T, grid_steps, trials, seed, max_steps=max_steps)
    return "stable supremum (MC)", None, ref


def _gim1_limit(run: Run, spec: ServiceMinusShiftedArrival):
    cfg = run.cfg
    trials = cfg.get("trials", 10 ** 5)
    batch = simulate_max_batch(WalkConfig(spec, 0.0, trials=trials, seed=cfg.seed,
                                          horizon=cfg.require("horizon"),
                                          max_steps=run.max_steps))
    d = EmpiricalDistribution.from_samples(batch.samples)
    s = gim1_sigma(spec.beta, spec.shift)
    hi = float(d.quantile(0.999))
    grid = np.linspace(0.0, hi, cfg.get("grid_points", 200))
    exact = 1.0 - exact_gim1_tail(spec.beta, spec.shift, grid)
    emp = ecdf_eval(d, grid)
    eps = dkw_epsilon(trials, DKW_DELTA)
    run.csv("ecdf.csv", ["x", "ecdf", "exact_cdf"], zip(grid, emp, exact))
    p0 = float((batch.samples == 0).mean())
    se0 = math.sqrt(s * (1 - s) / trials)
    dev = float(np.max(np.abs(emp - exact)))
    run.metrics.update(sigma_star=s, max_abs_dev=dev, dkw_eps=eps, p_zero=p0,
                       p_zero_exact=1 - s, K=batch.K)
    run.flag("dkw_band", dev <= eps)
    run.flag("atom_at_zero", abs(p0 - (1 - s)) <= 3 * se0)


def cmd_limit(run: Run):
    cfg = run.cfg
    spec = cfg.spec
    if isinstance(spec, ServiceMinusShiftedArrival):
        return _gim1_limit(run, spec)
    grid = sorted(cfg.require("a"), reverse=True)
    T = cfg.get("T", 20.0)
    trials = cfg.get("trials", 10 ** 4)
    label, law, ref = _limit_reference(spec, T, trials, cfg.seed + 1,
                                       cfg.get("grid_steps", 2000), run.max_steps)
    rows, curves, ecdf_rows = [], {}, []
    for i, a in enumerate(grid):
        wcfg = WalkConfig(spec, a, T=T, trials=trials, seed=cfg.seed,
                          perturbation=cfg.perturbation, max_steps=run.max_steps)
        batch = simulate_max_batch(wcfg)
        batch.write_csv(run.path(f"maxima_{i}.csv"))
        d = EmpiricalDistribution.from_samples(batch.scaled())
        ks = ks_distance(d, law) if law is not None else ks_two_sample(d, ref)
        rows.append((a, batch.n_a, batch.c_n_a, batch.K, ks, batch.truncation_certificate,
                     float((batch.samples == 0).mean())))
        curves[f"a={a:g}"] = d.samples
        hi = float(d.quantile(0.999))
        for x in np.linspace(0.0, hi, cfg.get("grid_points", 200)):
            ref_cdf = law(x) if law is not None else ecdf_eval(ref, x)
            ecdf_rows.append((a, x, ecdf_eval(d, x), float(ref_cdf)))
        log.info("a=%g n(a)=%d ks=%.4f", a, batch.n_a, ks)
    run.csv("ks.csv", ["a", "n_of_a", "c_of_n_of_a", "K", "ks", "truncation_certificate",
                       "p_zero"], rows)
    run.csv("ecdf.csv", ["a", "x", "ecdf", "limit_cdf"], ecdf_rows)
    ks = [r[4] for r in rows]
    run.metrics.update(reference=label, ks={str(r[0]): r[4] for r in rows},
                       dkw_eps=dkw_epsilon(trials, DKW_DELTA))
    if len(ks) > 1:
        run.flag("ks_decreasing", all(x > y for x, y in zip(ks, ks[1:])))
    run.flag("ks_smallest_a", ks[-1] < cfg.tol("ks"))
    if run.svg:
        from . import plotting
        plotting.ecdf_overlay(run.path("ecdf.svg"), curves, law, label, xlabel="M / c_n(a)")


# --------------------------------------------------------------------------
# spitzer
# --------------------------------------------------------------------------

def cmd_spitzer(run: Run):
    from .spitzer import SpitzerConfig, sigma3_bound, wiener_hopf_consistency, write_consistency_csv
    cfg = run.cfg
    scfg = SpitzerConfig(cfg.spec, cfg.require("a"), tuple(cfg.get("mu", [0.5, 1.0, 2.0])),
                         eps=cfg.get("eps", 0.1), T=cfg.get("T", 30.0),
                         trials=cfg.get("trials", 10 ** 4), seed=cfg.seed,
                         max_steps=run.max_steps)
    rows, result, batch = wiener_hopf_consistency(scfg)
    s3 = sigma3_bound(scfg.spec, scfg.a, result.n_a, scfg.T)
    result.write_terms_csv(run.path("terms.csv"))
    result.write_summary_csv(run.path("summary.csv"), sigma3=s3)
    write_consistency_csv(rows, run.path("consistency.csv"))
    run.metrics.update(n_of_a=result.n_a, c_of_n_of_a=result.c_n_a, K=result.K,
                       sigma3_bound=s3, truncation_certificate=batch.truncation_certificate)
    for r in rows:
        run.flag(f"wiener_hopf_mu={r.mu:g}", r.passed)
    if run.svg:
        from . import plotting
        ks = np.arange(1, result.K + 1)
        series = {f"mu={m:g}": (ks[result.t[:, j] > 0], result.t[result.t[:, j] > 0, j])
                  for j, m in enumerate(result.mu_grid) if m > 0}
        if series:
            plotting.loglog(run.path("terms.svg"), series, "k", "t_k")


# --------------------------------------------------------------------------
# inequality
# --------------------------------------------------------------------------

def cmd_inequality(run: Run):
    from .inequality import karamata_check, maximal_ratio_sweep, pruitt_component_check
    cfg = run.cfg
    spec = cfg.spec
    rep = maximal_ratio_sweep(spec, cfg.get("n", [100, 1000, 10000]),
                              cfg.get("x", [0.5, 1.0, 2.0, 4.0]),
                              cfg.get("trials", 10 ** 4), cfg.seed, max_steps=run.max_steps)
    rep.write_csv(run.path("sweep.csv"))
    xs = cfg.get("pruitt_x", list(np.geomspace(10.0, 1e4, 7)))
    comp, bounded = pruitt_component_check(spec, xs)
    run.csv("components.csv", ["x", "tail_ratio", "mean_ratio", "one"],
            [(r.x, r.tail_ratio, r.mean_ratio, 1.0) for r in comp])
    gamma = cfg.get("gamma", min(0.25, spec.alpha / 2))
    pairs = [(x, y) for i, x in enumerate(xs) for y in xs[i:]]
    kr, karg = karamata_check(spec, gamma, pairs)
    variation = rep.variation_across_n()
    c_hat = rep.C_hat
    run.metrics.update(C_hat=c_hat, variation=variation, karamata_ratio=kr,
                       karamata_pair=list(karg), gamma=gamma,
                       rare_cells=int(rep.rare.sum()),
                       zero_cell_upper_95=rep.one_sided_upper())
    run.flag("C_hat_finite", math.isfinite(c_hat))
    run.flag("variation_across_n", all(v < cfg.tol("variation") for v in variation.values()))
    run.flag("pruitt_components_bounded", bounded)


# --------------------------------------------------------------------------
# mstar
# --------------------------------------------------------------------------

def _mstar_transform(alpha, skew, mu):
    """Closed-form ``E exp(-mu M*)`` where one exists, else None."""
    if alpha == 2.0:
        return 2.0 / (2.0 + mu)
    if skew == "spectrally-positive":
        return 1.0 / (1.0 + mu ** (alpha - 1) / mittag_leffler_scale(alpha))
    if skew == "spectrally-negative":
        th = spectrally_negative_rate(alpha)
        return th / (th + mu)
    return None


def cmd_mstar(run: Run):
    cfg = run.cfg
    alpha = cfg.get("alpha", 2.0)
    skew = cfg.get("skew", "symmetric")
    T = cfg.get("T", 20.0)
    trials = cfg.get("trials", 10 ** 4)
    sup = mstar_sup_mc(alpha, skew, T, cfg.get("grid_steps", 2000), trials, cfg.seed,
                       max_steps=run.max_steps)
    law, label = None, None
    if alpha == 2.0:
        law, label = standardized_exponential_cdf, "Exp(2)"
        ks = ks_distance(sup, law)
        run.metrics["ks"] = ks
        run.flag("ks", ks < cfg.tol("ks"))
    elif skew == "spectrally-positive":
        c_fit, ks = calibrate_ml_scale(sup, alpha)
        law, label = MittagLeffler(alpha, c_fit).cdf, f"Mittag-Leffler(c={c_fit:.4g})"
        run.metrics.update(ml_scale_calibrated=c_fit, ml_scale_analytic=mittag_leffler_scale(alpha),
                           ks_calibrated=ks)
    elif skew == "spectrally-negative":
        rate = spectrally_negative_rate(alpha)
        fitted = 1.0 / float(sup.samples.mean())
        run.metrics.update(exponential_rate_analytic=rate, exponential_rate_fitted=fitted)
    hi = float(sup.quantile(0.999))
    grid = np.linspace(0.0, hi, 200)
    emp = ecdf_eval(sup, grid)
    ref = law(grid) if law is not None else np.full(grid.size, np.nan)
    run.csv("sup_ecdf.csv", ["x", "ecdf", "reference_cdf"], zip(grid, emp, ref))

    window = QuadratureWindow(eps=cfg.get("window_eps", 1e-6), T=cfg.get("window_T", 60.0),
                              nodes=cfg.get("nodes", 400), samples=cfg.get("samples", 10 ** 5))
    rows = []
    for mu in cfg.get("mu", [0.5, 1.0, 2.0, 4.0]):
        est, se, b_eps, b_T = mstar_laplace_mc(mu, alpha, skew, window, cfg.seed + 1)
        exact = _mstar_transform(alpha, skew, mu)
        ok = None
        if exact is not None:
            ok = abs(est - exact) <= cfg.tol("laplace_sigmas") * se + b_eps + b_T
            run.flag(f"laplace_mu={mu:g}", ok)
        rows.append((mu, est, se, b_eps, b_T, math.nan if exact is None else exact,
                     "" if ok is None else int(ok)))
    run.csv("laplace.csv", ["mu", "estimate", "stderr", "eps_budget", "T_budget", "exact",
                            "pass"], rows)
    if run.svg:
        from . import plotting
        plotting.ecdf_overlay(run.path("sup_ecdf.svg"), {"sup MC": sup.samples}, law,
                              label or "", xlabel="M*")


HANDLERS = {"normalize": cmd_normalize, "limit": cmd_limit, "spitzer": cmd_spitzer,
            "inequality": cmd_inequality, "mstar": cmd_mstar}


def build_parser():
    p = argparse.ArgumentParser(prog="heavytraffic", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--out", help="output directory (default: [run] out or out/<command>)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--svg", action="store_true", help="also write SVG figures")
    p.add_argument("--max-steps", type=float, help="jump-evaluation budget (default 1e10)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg.run["seed"] = args.seed
        out = args.out or cfg.get("out") or f"out/{cfg.command}"
        run = Run(cfg, out, args.svg, args.max_steps)
        t0 = time.perf_counter()
        HANDLERS[cfg.command](run)
        wall = time.perf_counter() - t0
    except (ConfigError, BudgetExceeded, BracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HeavyTrafficError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1
    manifest = write_manifest(run.out, cfg, run.metrics, run.flags, run.files, wall)
    for name, ok in run.flags.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"manifest: {manifest}")
    return 0 if all(run.flags.values()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
