import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rholoewner import driving as drv
from rholoewner.driving import ForcePointSpec
from rholoewner.errors import ConfigError
from rholoewner.sampler import (
    SimulationConfig,
    dual_rho,
    fit_hitting_slope,
    hitting_exponent,
    hitting_probabilities,
    path_generator,
    simulate_drive,
    tube_probability,
    wilson_interval,
)


def _cfg(**kw):
    base = dict(kappa=1.0, fp=ForcePointSpec.boundary(1.0, 0.0), T=0.5, seed=3, n_paths=200)
    base.update(kw)
    return SimulationConfig(**base)


def test_same_seed_same_paths():
    a = simulate_drive(_cfg(), record_paths=True)
    b = simulate_drive(_cfg(), record_paths=True)
    np.testing.assert_array_equal(a[1].final_value, b[1].final_value)
    np.testing.assert_array_equal(a[0][7].samples[1], b[0][7].samples[1])
    c = simulate_drive(_cfg(seed=4))
    assert not np.array_equal(a[1].final_value, c[1].final_value)


def test_paths_do_not_depend_on_batch_size():
    small = simulate_drive(_cfg(n_paths=10))[1].final_value
    big = simulate_drive(_cfg(n_paths=200))[1].final_value
    np.testing.assert_array_equal(small, big[:10])


def test_generators_are_distinct_per_path():
    a = path_generator(1, 0).standard_normal(4)
    b = path_generator(1, 1).standard_normal(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, path_generator(1, 0).standard_normal(4))


def test_zero_kappa_follows_closed_form():
    rho, x0 = 1.0, 1.0
    cfg = SimulationConfig(0.0, ForcePointSpec.boundary(x0, rho), T=1.0, dt_max=1e-4, n_paths=1)
    _, st_ = simulate_drive(cfg)
    assert st_.final_value[0] == pytest.approx(drv.make_chordal_sle0(rho, x0).eval(1.0), abs=1e-3)


def test_radial_zero_kappa_minus_two_gap():
    v0 = 2.0
    cfg = SimulationConfig(0.0, ForcePointSpec.radial(v0, -2.0), T=1.0, dt_max=1e-4, n_paths=1)
    _, st_ = simulate_drive(cfg)
    assert st_.final_value[0] == pytest.approx(drv.make_radial_sle0(-2.0, v0).eval(1.0), abs=1e-3)


def test_driftless_variance():
    # rho = 0: W is sqrt(kappa) times a Brownian motion
    cfg = SimulationConfig(2.0, ForcePointSpec.boundary(50.0, 0.0), T=1.0, seed=11, n_paths=4000)
    w = simulate_drive(cfg)[1].final_value
    assert abs(w.mean()) < 4 * math.sqrt(2.0 / 4000)
    assert w.var() == pytest.approx(2.0, rel=0.1)


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_interval_contains_estimate(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_recorded_paths_are_samples():
    drives, st_ = simulate_drive(_cfg(n_paths=3), record_paths=True)
    assert len(drives) == 3
    for d, w in zip(drives, st_.final_value):
        assert d.is_sampled and d.samples[1][-1] == w


def test_importance_matches_plain():
    cfg = SimulationConfig(2.0, ForcePointSpec.radial(math.pi, 0.0), T=1.0, eps_stop=0.3, seed=5, n_paths=4000)
    plain = hitting_probabilities(cfg, [0.3])[0]
    imp = hitting_probabilities(cfg, [0.3], proposal_rho=dual_rho(2.0, 0.0))[0]
    assert plain.method == "plain" and imp.method == "importance"
    assert plain.n_events > 50
    assert imp.lo <= plain.hi and plain.lo <= imp.hi


def test_hitting_slope_small_kappa():
    kappa, rho = 1.0, 0.0
    eps = (0.05, 0.1, 0.2)
    cfg = SimulationConfig(kappa, ForcePointSpec.radial(math.pi, rho), T=1.0, eps_stop=0.05, seed=8, n_paths=4000)
    est = hitting_probabilities(cfg, eps, proposal_rho=dual_rho(kappa, rho))
    assert est[0].p < est[1].p < est[2].p
    slope, _ = fit_hitting_slope(eps, est)
    assert abs(slope - hitting_exponent(kappa, rho)) < 0.5


def test_tube_probability_limits():
    cfg = SimulationConfig(0.5, ForcePointSpec.radial(math.pi, 1.0), T=0.5, seed=2, n_paths=300)
    center = drv.make_radial_sle0(1.0, math.pi)
    assert tube_probability(cfg, center, 100.0).p == 1.0
    assert tube_probability(cfg, center, 1e-4).p == 0.0
    with pytest.raises(ConfigError):
        tube_probability(cfg, center, 0.0)


def test_tube_favours_the_minimiser():
    # large deviations: -kappa log P stays comparable as kappa halves and the minimiser tube is likelier
    fp = ForcePointSpec.boundary(5.0, 0.0)
    center = drv.from_callable(lambda t: 1.5 * np.sin(np.pi * np.asarray(t)))
    zero = drv.make_zero()
    cost = []
    for kappa, n in ((1.0, 4000), (0.5, 20000)):
        cfg = SimulationConfig(kappa, fp, T=1.0, seed=9, n_paths=n)
        p = tube_probability(cfg, center, 0.8)
        assert p.n_events > 0
        assert tube_probability(cfg, zero, 0.8).p > p.p
        cost.append(-kappa * math.log(p.p))
    assert 0.5 < cost[0] / cost[1] < 2.0


def test_config_validation():
    fp = ForcePointSpec.boundary(1.0, 0.0)
    for bad in (dict(kappa=-1.0), dict(n_paths=0), dict(dt_max=0.0), dict(eps_stop=0.0), dict(T=0.0), dict(seed=-1)):
        with pytest.raises(ConfigError):
            SimulationConfig(**{"kappa": 1.0, "fp": fp, **bad})
    with pytest.raises(ConfigError):
        simulate_drive(SimulationConfig(0.0, fp, n_paths=1), proposal_rho=1.0)


def test_formulas():
    assert dual_rho(1.0, 0.0) == -3.0
    assert hitting_exponent(0.5, 1.0) == 11.0


def test_stats_serialise():
    _, st_ = simulate_drive(_cfg(n_paths=5))
    d = st_.to_dict(per_path=True)
    assert len(d["paths"]["final_value"]) == 5
    assert sum(d["stop_reasons"].values()) == 5
