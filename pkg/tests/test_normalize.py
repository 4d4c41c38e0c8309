import functools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from heavytraffic.errors import ConfigError
from heavytraffic.jumps import (ExpDifference, Gaussian, OneSidedParetoCentered, Rademacher,
                                TwoSidedPareto, truncated_second_moment)
from heavytraffic.normalize import NormalizationTable, c_of_n, drift_scale, n_of_a, rv_slope_check


@functools.lru_cache(maxsize=None)
def _ratio_peak(spec):
    us = np.geomspace(1e-3, 1e4, 2000) * spec.scale_hint
    r = np.array([truncated_second_moment(spec, u) / u ** 2 for u in us])
    return us[int(np.argmax(r))], r.max()


def oracle_c(spec, n):
    """Largest root of V(u)/u^2 = 1/n, found right of the ratio's peak by brentq."""
    peak, top = _ratio_peak(spec)
    if top <= 1.0 / n:
        return None
    f = lambda u: truncated_second_moment(spec, u) / u ** 2 - 1.0 / n
    hi = peak
    while f(hi) > 0:
        hi *= 2
    return optimize.brentq(f, peak, hi, xtol=1e-13, rtol=1e-13)


def oracle_n(spec, a):
    """Linear scan from the first maximizer of c_n/n over n <= 64."""
    cs = {n: oracle_c(spec, n) for n in range(1, 65)}
    start = max((n for n in cs if cs[n] is not None), key=lambda n: (cs[n] / n, -n))
    n = start
    while True:
        c = cs[n] if n in cs else oracle_c(spec, n)
        if c <= a * n * (1 + 1e-8):
            return n
        n += 1


def test_rademacher_c_is_sqrt_n():
    for n in [1, 4, 100, 12345]:
        assert c_of_n(Rademacher(), n) == pytest.approx(math.sqrt(n), rel=1e-8)


@pytest.mark.parametrize("a,n", [(0.1, 100), (0.25, 16), (0.2, 25), (0.3, 12)])
def test_rademacher_n_of_a(a, n):
    assert n_of_a(Rademacher(), a) == n


def test_gaussian_c_is_sqrt_n_for_large_n():
    assert c_of_n(Gaussian(sigma=1.0), 10 ** 6) == pytest.approx(1000.0, rel=1e-6)


@pytest.mark.parametrize("spec", [Gaussian(sigma=1.0), ExpDifference(beta=1.0),
                                  TwoSidedPareto(alpha=1.5, xmin=1.0),
                                  OneSidedParetoCentered(alpha=1.5, xmin=1.0)], ids=str)
@pytest.mark.parametrize("n", [10, 1000, 10 ** 6])
def test_c_of_n_matches_root_oracle(spec, n):
    ref = oracle_c(spec, n)
    assert c_of_n(spec, n) == pytest.approx(ref, rel=5e-9)


@pytest.mark.parametrize("spec,a", [(ExpDifference(beta=1.0), 0.4), (ExpDifference(beta=1.0), 0.2),
                                    (ExpDifference(beta=1.0), 0.1),
                                    (TwoSidedPareto(alpha=1.5, xmin=1.0), 0.5),
                                    (TwoSidedPareto(alpha=1.5, xmin=1.0), 0.1),
                                    (OneSidedParetoCentered(alpha=1.5, xmin=1.0), 0.1),
                                    (Gaussian(sigma=1.0), 0.05)], ids=str)
def test_n_of_a_matches_scan_oracle(spec, a):
    assert n_of_a(spec, a) == oracle_n(spec, a)


def test_pareto_n_of_a_frozen_values():
    # frozen from the scan oracle above
    spec = TwoSidedPareto(alpha=1.5, xmin=1.0)
    assert n_of_a(spec, 0.1) == 8390
    assert drift_scale(spec, 0.1)[1] == pytest.approx(838.98, rel=1e-4)


def test_exp_difference_skips_small_n_transient():
    # c_1 .. c_5 vanish for the Laplace law; the crossing must come after the peak of c_n/n
    spec = ExpDifference(beta=1.0)
    n = n_of_a(spec, 0.4)
    assert n == 9
    assert c_of_n(spec, n) <= 0.4 * n


def test_defining_ratio_on_table():
    for spec in [Gaussian(sigma=1.0), TwoSidedPareto(alpha=1.5, xmin=1.0)]:
        table = NormalizationTable.build(spec, 1e3, 1e5)
        r = table.defining_ratio()
        assert np.all(np.abs(r - 1) < 1e-8)


def test_table_interpolation_and_csv(tmp_path):
    spec = TwoSidedPareto(alpha=1.5, xmin=1.0)
    table = NormalizationTable.build(spec, 1e3, 1e4)
    assert table.ns[0] == 1000 and table.ns[-1] == 10000
    assert np.all(np.diff(table.ns) > 0)
    mid = 3333.0
    assert table.c_at(mid) == pytest.approx(c_of_n(spec, 3333), rel=1e-3)
    table.n_of_a(0.5)
    table.write_csv(tmp_path / "cn.csv")
    table.write_drift_csv(tmp_path / "drift.csv")
    lines = (tmp_path / "cn.csv").read_text().splitlines()
    assert lines[0] == "n,c_n" and len(lines) == len(table.entries) + 1
    assert (tmp_path / "drift.csv").read_text().splitlines()[1].startswith("0.5,45,")


@pytest.mark.parametrize("spec,alpha", [(Gaussian(sigma=1.0), 2.0),
                                        (TwoSidedPareto(alpha=1.5, xmin=1.0), 1.5)], ids=str)
def test_regular_variation_slopes(spec, alpha):
    table = NormalizationTable.build(spec, 1e3, 1e6, ratio=1.5)
    sc, sn = rv_slope_check(table)
    assert abs(sc - 1 / alpha) < 0.02
    assert abs(sn + alpha / (alpha - 1)) < 0.1


def test_slope_check_needs_three_decades():
    table = NormalizationTable.build(Gaussian(), 1e3, 1e5)
    with pytest.raises(ConfigError):
        rv_slope_check(table)


@pytest.mark.parametrize("a", [0.0, -0.1, 1.0, 2.0])
def test_n_of_a_rejects_bad_drift(a):
    with pytest.raises(ConfigError):
        n_of_a(Gaussian(), a)


def test_c_of_n_rejects_n_below_one():
    with pytest.raises(ConfigError):
        c_of_n(Gaussian(), 0)


SPECS = [Gaussian(sigma=1.0), ExpDifference(beta=1.0), TwoSidedPareto(alpha=1.5, xmin=1.0),
         OneSidedParetoCentered(alpha=1.5, xmin=1.0), Rademacher()]


@given(st.sampled_from(SPECS), st.integers(1, 10 ** 7), st.integers(1, 10 ** 3))
def test_c_of_n_nondecreasing(spec, n, k):
    assert c_of_n(spec, n) <= c_of_n(spec, n + k) * (1 + 1e-8)


@given(st.sampled_from(SPECS), st.floats(0.02, 0.6), st.floats(1.0, 3.0))
def test_n_of_a_nonincreasing_in_a(spec, a, factor):
    b = min(a * factor, 0.9)
    assert n_of_a(spec, b) <= n_of_a(spec, a)


@given(st.sampled_from(SPECS), st.floats(0.02, 0.6))
def test_n_of_a_is_a_crossing(spec, a):
    n = n_of_a(spec, a)
    assert c_of_n(spec, n) <= a * n * (1 + 1e-8)
