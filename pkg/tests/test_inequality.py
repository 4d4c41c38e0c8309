import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heavytraffic.errors import ConfigError
from heavytraffic.inequality import (RARE_BOUND, InequalityReport, karamata_check,
                                     maximal_ratio_sweep, pruitt_component_check)
from heavytraffic.jumps import (Gaussian, OneSidedParetoCentered, Rademacher,
                                ServiceMinusShiftedArrival, TwoSidedPareto)


def test_rademacher_two_steps_exact():
    # max(S_1, S_2) >= 2 only on (+1, +1); V(2) = 1 so the bound is 2 / 4
    rep = maximal_ratio_sweep(Rademacher(), [2], [2.0], 40000, 0, relative=False)
    assert rep.bound[0] == pytest.approx(0.5)
    assert abs(rep.p_hat[0] - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 40000)
    assert rep.ratio[0] == pytest.approx(rep.p_hat[0] / 0.5)


def test_gaussian_ratio_below_reflection_bound():
    # P(max S_k >= x) <= 2 P(S_n >= x) and V(x) <= 1
    n, m = 200, 2.0
    rep = maximal_ratio_sweep(Gaussian(sigma=1.0), [n], [m], 20000, 1)
    refl = math.erfc(rep.x[0] / math.sqrt(2 * n))
    assert rep.p_hat[0] <= refl + 4 * rep.stderr[0]
    assert rep.x_over_cn[0] == pytest.approx(m)


def test_sweep_shapes_and_csv(tmp_path):
    rep = maximal_ratio_sweep(TwoSidedPareto(alpha=1.5, xmin=1.0), [100, 1000], [0.5, 1, 2, 4],
                              4000, 2)
    assert rep.n.size == 8 and set(rep.n) == {100, 1000}
    assert np.all(rep.ratio >= 0)
    assert rep.C_hat == pytest.approx(rep.ratio[~rep.rare].max())
    assert rep.one_sided_upper() == pytest.approx(-math.log(0.05) / 4000)
    assert all(v >= 1 for v in rep.variation_across_n().values())
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "n,x,p_hat,stderr,bound,ratio,rare" and len(lines) == 9


def test_rare_cells_excluded_from_calibration():
    rep = InequalityReport(Gaussian(), np.array([10.0, 10.0]), np.array([1.0, 1e3]),
                           np.array([0.5, 500.0]), np.array([0.1, 1e-6]),
                           np.array([0.01, 1e-6]), np.array([0.5, RARE_BOUND / 10]), 100)
    assert list(rep.rare) == [False, True]
    assert rep.C_hat == pytest.approx(0.2)
    only_rare = InequalityReport(Gaussian(), np.array([10.0]), np.array([1e3]),
                                 np.array([500.0]), np.array([0.0]), np.array([0.0]),
                                 np.array([1e-9]), 100)
    with pytest.raises(ConfigError):
        only_rare.C_hat


def test_sweep_validation():
    with pytest.raises(ConfigError):
        maximal_ratio_sweep(Gaussian(), [], [1.0], 10, 0)
    with pytest.raises(ConfigError):
        maximal_ratio_sweep(Gaussian(), [10], [-1.0], 10, 0)
    with pytest.raises(ConfigError):
        maximal_ratio_sweep(ServiceMinusShiftedArrival(beta=1.0, shift=0.5), [10], [1.0], 10, 0)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 32))
def test_exceedance_monotone_in_n_and_x(seed):
    xs = [1.0, 3.0, 10.0]
    rep = maximal_ratio_sweep(TwoSidedPareto(alpha=1.5, xmin=1.0), [5, 20, 80], xs, 300, seed,
                              relative=False)
    p = rep.p_hat.reshape(3, 3)
    assert np.all(np.diff(p, axis=1) <= 0)
    assert np.all(np.diff(p, axis=0) >= 0)


def test_karamata_pair_value():
    spec = TwoSidedPareto(alpha=1.5, xmin=1.0)
    # V(x) = 3 (sqrt(x) - 1)
    r, arg = karamata_check(spec, 0.25, [(4.0, 16.0)])
    assert r == pytest.approx((4 - 1) / (2 - 1) / 4 ** 0.75)
    assert arg == (4.0, 16.0)
    r, _ = karamata_check(spec, 0.25, [(x, y) for x in np.geomspace(10, 1e4, 8)
                                       for y in np.geomspace(x, 1e6, 8)])
    assert r <= 1.5
    with pytest.raises(ConfigError):
        karamata_check(spec, 2.0, [(1.0, 2.0)])
    with pytest.raises(ConfigError):
        karamata_check(spec, 0.2, [(0.5, 2.0)])


def test_pruitt_components_pareto():
    # symmetric: no truncated mean; tail ratio sqrt(x) / (3 (sqrt(x) - 1)) -> 1/3
    rows, bounded = pruitt_component_check(TwoSidedPareto(alpha=1.5, xmin=1.0), [100.0, 1e3, 1e4])
    assert bounded
    for r in rows:
        s = math.sqrt(r.x)
        assert r.tail_ratio == pytest.approx(s / (3 * (s - 1)))
        assert r.mean_ratio == pytest.approx(0.0, abs=1e-12)
    assert rows[1].tail_ratio == pytest.approx(1 / 3, rel=0.05)


def test_pruitt_midpoint_rule_flags_preasymptotic_grids():
    # near the support the ratios are far above their midpoint value
    _, bounded = pruitt_component_check(TwoSidedPareto(alpha=1.5, xmin=1.0), [4.0, 100.0, 1e4])
    assert not bounded


def test_pruitt_ratios_peak_at_smallest_grid_point():
    # on x = 2^1 .. 2^12 the constant read off the smallest x covers the rest of the grid
    rows, _ = pruitt_component_check(TwoSidedPareto(alpha=1.5, xmin=1.0), 2.0 ** np.arange(1, 13))
    vals = np.array([r.tail_ratio for r in rows])
    assert np.all(vals <= 1.5 * vals[0] + 1e-12)


def test_pruitt_ratios_bounded_for_shifted_law():
    # the centered one-sided law peaks near its shift, not at the smallest x
    rows, _ = pruitt_component_check(OneSidedParetoCentered(alpha=1.5, xmin=1.0),
                                     2.0 ** np.arange(0, 13))
    assert max(r.tail_ratio for r in rows) < 10
    assert max(r.mean_ratio for r in rows) < 3


def test_pruitt_components_one_sided():
    rows, bounded = pruitt_component_check(OneSidedParetoCentered(alpha=1.5, xmin=1.0),
                                           np.geomspace(100, 1e5, 7))
    assert bounded
    assert all(r.mean_ratio > 0 for r in rows)
    with pytest.raises(ConfigError):
        pruitt_component_check(TwoSidedPareto(alpha=1.5, xmin=1.0), [0.5])
