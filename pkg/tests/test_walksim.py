import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from heavytraffic import mc
from heavytraffic.errors import BudgetExceeded, ConfigError
from heavytraffic.jumps import (ExpDifference, JumpSpec, OneSidedParetoCentered, Rademacher,
                                ServiceMinusShiftedArrival, TwoSidedPareto)
from heavytraffic.walksim import (PerturbationSpec, WalkConfig, dyadic_bound, exact_gim1_tail,
                                  gim1_laplace, gim1_sigma, simulate_max_batch,
                                  truncation_certificate, truncation_tail_probe,
                                  truncation_tail_probe_sweep)


@dataclass(frozen=True)
class NonPositiveSteps(JumpSpec):
    """``-|Rademacher| - shift``: a walk that can never go above zero."""

    shift: float = 0.5
    kind: ClassVar[str] = "NonPositiveSteps"

    @property
    def centered(self):
        return False

    def draw(self, rng, shape):
        return -1.0 - self.shift + 0.0 * rng.random(shape)


def test_gim1_sigma_against_brentq():
    f = lambda s: s * (2 - s) - math.exp(-0.5 * (1 - s))
    ref = optimize.brentq(f, 1e-9, 1 - 1e-9, xtol=1e-15)
    assert gim1_sigma(1.0, 0.5) == pytest.approx(ref, abs=1e-11)
    assert gim1_sigma(1.0, 0.5) == pytest.approx(0.5520385540, abs=1e-9)


def test_gim1_laplace_and_tail_consistent():
    s = gim1_sigma(1.0, 0.5)
    assert exact_gim1_tail(1.0, 0.5, 0.0) == pytest.approx(s)
    assert gim1_laplace(1.0, 0.5, 0.0) == pytest.approx(1.0)
    # transform of atom plus exponential tail, by direct integration
    lam, r = 0.7, 1 - s
    assert gim1_laplace(1.0, 0.5, lam) == pytest.approx((1 - s) + s * r / (r + lam))


def test_gim1_rejects_nonpositive_shift():
    with pytest.raises(ConfigError):
        gim1_sigma(1.0, 0.0)


def test_gim1_simulation_matches_exact_law():
    spec = ServiceMinusShiftedArrival(beta=1.0, shift=0.5)
    b = simulate_max_batch(WalkConfig(spec, 0.0, trials=20000, seed=3, horizon=1000))
    s = gim1_sigma(1.0, 0.5)
    x = np.sort(b.samples)
    grid = np.linspace(0, np.quantile(x, 0.99), 50)
    emp = np.searchsorted(x, grid, side="right") / x.size
    eps = math.sqrt(math.log(2 / 0.001) / (2 * x.size))
    assert np.max(np.abs(emp - (1 - exact_gim1_tail(1.0, 0.5, grid)))) < eps
    assert abs((b.samples == 0).mean() - (1 - s)) < 4 * math.sqrt(s * (1 - s) / x.size)


def test_nonpositive_walk_has_zero_maximum():
    b = simulate_max_batch(WalkConfig(NonPositiveSteps(), 0.3, trials=50, seed=1, horizon=200))
    assert np.all(b.samples == 0.0)
    assert np.all(b.argmax == 0)


def test_samples_nonnegative_and_deterministic():
    cfg = WalkConfig(TwoSidedPareto(alpha=1.5, xmin=1.0), 0.5, T=5, trials=300, seed=9)
    a, b = simulate_max_batch(cfg), simulate_max_batch(cfg)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert np.all(a.samples >= 0) and a.samples.size == 300
    assert a.K == math.ceil(5 * a.n_a)
    other = simulate_max_batch(WalkConfig(cfg.spec, 0.5, T=5, trials=300, seed=10))
    assert not np.array_equal(a.samples, other.samples)


def test_worker_count_does_not_change_results(monkeypatch):
    cfg = WalkConfig(ExpDifference(beta=1.0), 0.2, T=3, trials=9000, seed=4)
    monkeypatch.setenv(mc.WORKERS_ENV, "1")
    one = simulate_max_batch(cfg).samples
    monkeypatch.setenv(mc.WORKERS_ENV, "3")
    three = simulate_max_batch(cfg).samples
    np.testing.assert_array_equal(one, three)


def test_bad_worker_env(monkeypatch):
    monkeypatch.setenv(mc.WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        mc.worker_count()


def test_longer_horizon_extends_the_same_paths():
    spec = OneSidedParetoCentered(alpha=1.5, xmin=1.0)
    short = simulate_max_batch(WalkConfig(spec, 0.0, trials=500, seed=2, horizon=300))
    long = simulate_max_batch(WalkConfig(spec, 0.0, trials=500, seed=2, horizon=3000))
    assert np.all(short.samples <= long.samples)
    same = long.argmax <= 300
    np.testing.assert_allclose(short.samples[same], long.samples[same], rtol=1e-12)


def test_argmax_points_at_the_maximum():
    spec = Rademacher()
    rng = np.random.default_rng(0)
    seg, run_max, argmax, final = mc.walk_extrema(spec, 0.1, [0, 50], 7, rng)
    rng = np.random.default_rng(0)
    steps = spec.draw(rng, (50, 7)) - 0.1
    path = np.vstack([np.zeros(7), np.cumsum(steps, axis=0)])
    np.testing.assert_allclose(run_max, path.max(axis=0))
    np.testing.assert_allclose(path[argmax, np.arange(7)], run_max)
    np.testing.assert_allclose(final, path[-1])
    np.testing.assert_allclose(seg[:, 0], path[1:].max(axis=0))


def test_budget_refusal():
    cfg = WalkConfig(ExpDifference(beta=1.0), 0.1, T=20, trials=10 ** 4, seed=0, max_steps=1e6)
    with pytest.raises(BudgetExceeded) as exc:
        simulate_max_batch(cfg)
    assert "reduce" in str(exc.value)


@pytest.mark.parametrize("kw", [dict(a=0.0), dict(a=0.1, T=0.5), dict(a=0.1, trials=0)])
def test_walk_config_validation(kw):
    with pytest.raises(ConfigError):
        WalkConfig(ExpDifference(beta=1.0), **kw)


def test_uncentered_spec_needs_horizon():
    with pytest.raises(ConfigError):
        WalkConfig(ServiceMinusShiftedArrival(beta=1.0, shift=0.5), 0.1)


def test_perturbation_moments():
    u = PerturbationSpec("uniform", 2.0)
    assert u.variance == pytest.approx(4 / 3)
    assert u.abs_moment(4) == pytest.approx(16 / 5)
    r = PerturbationSpec("rademacher", 0.5)
    assert r.variance == 0.25 and r.abs_moment(3) == 0.125
    y = u.draw(np.random.default_rng(0), 200_000)
    assert abs(y.mean()) < 5 * math.sqrt(u.variance / y.size)
    assert np.all(np.abs(y) <= 2.0)
    with pytest.raises(ConfigError):
        PerturbationSpec("cauchy")


def test_perturbation_changes_paths_not_jump_stream():
    spec = ExpDifference(beta=1.0)
    base = simulate_max_batch(WalkConfig(spec, 0.2, T=2, trials=200, seed=5))
    pert = simulate_max_batch(WalkConfig(spec, 0.2, T=2, trials=200, seed=5,
                                         perturbation=PerturbationSpec("uniform", 1e-9)))
    np.testing.assert_allclose(base.samples, pert.samples, atol=1e-6)


@pytest.mark.parametrize("spec", [ExpDifference(beta=1.0), TwoSidedPareto(alpha=1.5, xmin=1.0),
                                  OneSidedParetoCentered(alpha=1.5, xmin=1.0)], ids=str)
def test_certificate_halves_to_quarters_under_doubling(spec):
    a = 0.1
    cfg = WalkConfig(spec, a, T=10)
    n, _ = cfg.scale()
    ratio = dyadic_bound(spec, a, n, 20) / dyadic_bound(spec, a, n, 10)
    assert ratio <= 2 ** (1 - spec.alpha) * 1.05
    assert truncation_certificate(cfg) == pytest.approx(dyadic_bound(spec, a, n, 10))


def test_certificate_for_gaussian_domain_is_order_one_over_T():
    # finite variance: B(T) ~ sum 2^(j+1) n T sigma^2 / (2^j a n T)^2 = 4 sigma^2 / (a^2 n T)
    spec = ExpDifference(beta=1.0)
    n = 200
    assert dyadic_bound(spec, 0.1, n, 1000) == pytest.approx(4 * 2 / (0.01 * n * 1000), rel=1e-3)


def test_probe_decreases_and_matches_single_window():
    cfg = WalkConfig(TwoSidedPareto(alpha=1.5, xmin=1.0), 0.5, T=2, trials=3000, seed=8)
    sweep = truncation_tail_probe_sweep(cfg, [2, 4, 8], 64)
    assert np.all(np.diff(sweep.p_hat) <= 0)
    p, se = truncation_tail_probe(cfg, 4, 64)
    assert p == pytest.approx(sweep.p_hat[1]) and se > 0
    with pytest.raises(ConfigError):
        truncation_tail_probe(cfg, 8, 4)


def test_chunk_sizes():
    assert mc.chunk_sizes(10000) == [4096, 4096, 1808]
    assert sum(mc.chunk_sizes(123457)) == 123457
    with pytest.raises(ConfigError):
        mc.chunk_sizes(0)


@settings(max_examples=15)
@given(st.integers(0, 2 ** 63), st.integers(1, 300), st.floats(0.05, 0.9))
def test_maximum_dominates_final_value_and_zero(seed, horizon, a):
    rng = np.random.default_rng(seed)
    seg, run_max, argmax, final = mc.walk_extrema(ExpDifference(beta=1.0), a, [0, horizon], 5, rng)
    assert np.all(run_max >= 0) and np.all(run_max >= final - 1e-12)
    assert np.all((0 <= argmax) & (argmax <= horizon))
