import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, solve_ivp

from rholoewner import driving as drv
from rholoewner.driving import ForcePointSpec
from rholoewner.energy import (
    bound_certificates,
    coordinate_change_check,
    energy_additivity_check,
    is_absolutely_continuous,
    min_energy_through_point,
    rho_energy_direct,
    rho_energy_integrated,
    welding_lower_bound,
    welding_track,
)
from rholoewner.errors import ConfigError
from rholoewner.loewner import trace

slow = settings(max_examples=8, deadline=None)


@pytest.mark.parametrize("rho,x0", [(2.0, 1.0), (-1.0, -0.5), (0.5, 3.0), (-3.0, 1.0)])
def test_minimiser_has_zero_energy(rho, x0):
    d = drv.make_chordal_sle0(rho, x0)
    T = min(1.0, 0.9 * d.horizon)
    assert rho_energy_direct(d, ForcePointSpec.boundary(x0, rho), T) < 1e-12


def test_radial_and_spiral_minimisers():
    d = drv.make_radial_sle0(1.5, 2.0)
    assert rho_energy_direct(d, ForcePointSpec.radial(2.0, 1.5), 2.0) < 1e-12
    z0 = -0.4 + 0.7j
    s = drv.make_chordal_sle0_spiral(z0)
    assert rho_energy_direct(s, ForcePointSpec.interior(z0, -4.0), 0.9 * s.horizon) < 1e-12


@pytest.mark.parametrize("rho", [-1.5, 1.0, 3.0])
def test_zero_driving_against_quadrature(rho):
    # x_t = sqrt(1 + 4t) and the drift is -1/x_t
    oracle = quad(lambda t: 0.5 * rho * rho / (1 + 4 * t), 0, 1)[0]
    got = rho_energy_direct(drv.make_zero(), ForcePointSpec.boundary(1.0, rho), 1.0)
    assert got == pytest.approx(oracle, rel=1e-6)


def test_quadratic_growth_off_the_minimiser():
    base = drv.make_chordal_sle0(1.0, 1.0)
    fp = ForcePointSpec.boundary(1.0, 1.0)

    def bumped(delta):
        return drv.from_callable(lambda t: base.func(t) + delta * np.sin(3 * t),
                                 lambda t: base.deriv_func(t) + 3 * delta * np.cos(3 * t))

    e = [rho_energy_direct(bumped(d), fp, 1.0, dt=1e-3) for d in (0.1, 0.05, 0.025)]
    assert all(x > 0 for x in e)
    assert e[0] / e[1] == pytest.approx(4.0, rel=0.05)
    assert e[1] / e[2] == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_scale_invariance(lam):
    d = drv.make_trigonometric([0.3, -0.2], [0.4, 1.0], 1.0)
    z0 = 0.3 + 0.9j
    a = rho_energy_direct(d, ForcePointSpec.interior(z0, 1.0), 1.0, dt=1e-3)
    b = rho_energy_direct(d.rescaled(lam), ForcePointSpec.interior(lam * z0, 1.0), lam * lam, dt=1e-3 * lam * lam)
    assert b == pytest.approx(a, rel=1e-6)


@given(st.integers(0, 10_000), st.floats(-1.5, 3.0))
@slow
def test_direct_matches_integrated_boundary(seed, rho):
    d = drv.random_band_limited(np.random.default_rng(seed))
    rep = rho_energy_integrated(d, ForcePointSpec.boundary(1.5, rho), 1.0, dt=5e-4)
    assert rep.discrepancy <= 1e-3 * max(1.0, abs(rep.direct))


@given(st.integers(0, 10_000), st.floats(-8.0, 2.0))
@slow
def test_direct_matches_integrated_interior(seed, rho):
    d = drv.random_band_limited(np.random.default_rng(seed))
    rep = rho_energy_integrated(d, ForcePointSpec.interior(0.2 + 1.0j, rho), 1.0, dt=5e-4)
    assert rep.discrepancy <= 1e-3 * max(1.0, abs(rep.direct))


def test_discrepancy_shrinks_with_dt():
    d = drv.make_trigonometric([0.4, 0.2], [0.3, 1.1], 2.0)
    fp = ForcePointSpec.interior(-0.3 + 0.6j, 2.0)
    errs = [rho_energy_integrated(d, fp, 0.5, dt=h).discrepancy for h in (2e-3, 1e-3, 5e-4)]
    assert errs[2] < errs[1] < errs[0]


def test_radial_direct_matches_integrated():
    d = drv.make_trigonometric([0.3, 0.1], [0.0, 0.5], 1.0, setting=drv.Setting.RADIAL)
    rep = rho_energy_integrated(d, ForcePointSpec.radial(2.5, 1.0), 1.0, dt=5e-4)
    assert rep.discrepancy < 1e-4


def test_report_serialises():
    d = drv.make_trigonometric([0.2], [0.0], 1.0)
    rep = rho_energy_integrated(d, ForcePointSpec.interior(1j, -2.0), 0.5)
    out = rep.to_dict()
    assert set(out) >= {"direct", "integrated", "terms", "certificates"}
    assert math.isfinite(out["terms"]["base_energy"])


@given(st.integers(0, 10_000), st.sampled_from(["boundary", "interior", "radial"]))
@slow
def test_additivity(seed, kind):
    rng = np.random.default_rng(seed)
    if kind == "radial":
        d = drv.random_band_limited(rng, setting=drv.Setting.RADIAL)
        fp = ForcePointSpec.radial(2.0, 0.5)
    else:
        d = drv.random_band_limited(rng)
        fp = ForcePointSpec.boundary(1.0, 0.5) if kind == "boundary" else ForcePointSpec.interior(0.5 + 0.8j, 0.5)
    assert energy_additivity_check(d, fp, 1.0, 0.375, dt=1e-3) < 1e-6


def test_brownian_samples_have_infinite_energy():
    rng = np.random.default_rng(5)
    t = np.linspace(0, 1, 4097)
    w = np.concatenate([[0.0], np.cumsum(rng.normal(scale=np.sqrt(np.diff(t))))])
    bm = drv.from_samples(t, w)
    assert not is_absolutely_continuous(bm)
    assert rho_energy_direct(bm, ForcePointSpec.boundary(2.0, 0.0), 1.0) == math.inf
    smooth = drv.from_samples(t, np.sin(3 * t))
    assert is_absolutely_continuous(smooth)


def _sle0_minus8_energy(z0):
    """Chordal energy of SLE_0(-8) aimed at z0, up to reaching it (independent ODE solve)."""

    def f(t, y):
        W, z = y[0], y[1] + 1j * y[2]
        wd = -8.0 * (1 / (W - z)).real
        zd = 2 / (z - W)
        return [wd, zd.real, zd.imag, 0.5 * wd * wd]

    hit = lambda t, y: abs(y[1] + 1j * y[2] - y[0]) - 1e-7
    hit.terminal = True
    sol = solve_ivp(f, (0, 10), [0, z0.real, z0.imag, 0], rtol=1e-12, atol=1e-14, events=hit, method="DOP853")
    return sol.y[3, -1]


@pytest.mark.parametrize("z0", [1j, 0.3 + 0.8j, -1 + 0.5j, 2 + 1j])
def test_min_energy_through_point(z0):
    assert min_energy_through_point(z0) == pytest.approx(_sle0_minus8_energy(z0), abs=1e-9)
    with pytest.raises(ConfigError):
        min_energy_through_point(1.0)


def test_welding_bound_vanishes_on_minimiser():
    rho, x0 = 1.0, 1.0
    tr = welding_track(drv.make_chordal_sle0(rho, x0), rho, x0, 2.0)
    bound, rT, r0 = welding_lower_bound(tr, rho, x0)
    assert abs(bound) < 1e-10
    assert rT == pytest.approx(r0, abs=1e-10)


@given(st.integers(0, 10_000), st.floats(-1.8, 4.0), st.floats(-2.0, 2.0).filter(lambda x: abs(x) > 0.2))
@slow
def test_boundary_certificates(seed, rho, x0):
    d = drv.random_band_limited(np.random.default_rng(seed))
    certs = bound_certificates(d, ForcePointSpec.boundary(x0, rho), 1.0, dt=2e-4)
    assert {c.name for c in certs} == {"boundary_energy_sandwich", "welding_lower_bound"}
    assert all(c.ok for c in certs), [(c.name, c.note) for c in certs]


@given(st.integers(0, 10_000), st.floats(-9.0, -4.2))
@slow
def test_interior_certificates(seed, rho):
    d = drv.random_band_limited(np.random.default_rng(seed))
    certs = bound_certificates(d, ForcePointSpec.interior(0.4 + 0.9j, rho), 1.0, dt=2e-4)
    assert all(c.ok for c in certs), [(c.name, c.note) for c in certs]


@given(st.integers(0, 10_000))
@slow
def test_radial_certificates(seed):
    d = drv.random_band_limited(np.random.default_rng(seed), setting=drv.Setting.RADIAL)
    certs = bound_certificates(d, ForcePointSpec.radial(math.pi, 0.0), 1.0, dt=2e-4)
    assert all(c.ok for c in certs), [(c.name, c.note) for c in certs]


def test_coordinate_change_boundary_case():
    d = drv.make_trigonometric([0.4, 0.2], [0.3, 1.1], 2.0)
    c = trace(d, n_steps=800, T=0.5)
    res = coordinate_change_check(c, 1.0, 3.0)
    assert res.relative < 1e-2
