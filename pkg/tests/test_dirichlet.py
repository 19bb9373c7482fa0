import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from rholoewner.dirichlet import (
    Rectangle,
    Sector,
    corner_constant,
    corner_map,
    grid_dirichlet,
    identity_map,
    mobius_map,
    power_map,
    renormalized_dirichlet,
    rotate_domain,
    scaling_map,
    theorem_identity_trivial_checks,
)
from rholoewner.errors import ConfigError, NonConvergent, SingularityOnGrid


def _power_oracle(p, theta, r, R):
    # |grad (p-1) log|z||^2 = (p-1)^2/|z|^2 integrated over the sector, over pi
    return (p - 1) ** 2 * theta * math.log(R / r) / math.pi


def test_trivial_maps_have_zero_energy():
    sec = Sector(1.0, 3.0, 0.0, 2.0)
    assert grid_dirichlet(identity_map(sec), resolution=20) == 0.0
    assert grid_dirichlet(scaling_map(2 - 1j, Rectangle(0, 1, 0, 1)), resolution=20) == 0.0


@given(st.floats(0.3, 3.0), st.floats(0.5, 6.0), st.floats(2.0, 50.0))
@settings(max_examples=20, deadline=None)
def test_power_map_oracle(p, theta, R):
    got = grid_dirichlet(power_map(p, theta, 1.0, R), resolution=60)
    assert got == pytest.approx(_power_oracle(p, theta, 1.0, R), rel=1e-3, abs=1e-12)


def test_convergence_order_uniform_grid():
    mp = power_map(2.5, 1.0, 1.0, 10.0)
    exact = _power_oracle(2.5, 1.0, 1.0, 10.0)
    errs = [abs(grid_dirichlet(mp, resolution=n, n_theta=8, spacing="uniform") - exact) for n in (20, 40, 80)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0)


def test_mobius_against_quadrature():
    a, b, c, d = 1.0, 2.0, 1.0, 3.0 + 1.0j
    rect = Rectangle(0.0, 1.0, 0.0, 1.0)
    pole = -d / c
    oracle = dblquad(lambda y, x: 4.0 / abs(complex(x, y) - pole) ** 2, 0, 1, 0, 1)[0] / math.pi
    assert grid_dirichlet(mobius_map(a, b, c, d, rect), resolution=200) == pytest.approx(oracle, rel=1e-4)
    assert grid_dirichlet(mobius_map(a, b, c, d, rect), resolution=50, analytic_gradient=True) == pytest.approx(oracle, rel=1e-3)


def test_pole_on_grid_is_rejected():
    with pytest.raises(SingularityOnGrid):
        grid_dirichlet(mobius_map(1, 0, 1, -0.5 - 0.5j, Rectangle(0, 1, 0, 1)))


@pytest.mark.parametrize("phi", [0.3, 1.0, math.pi])
def test_rotation_invariance(phi):
    mp = corner_map(0.3, 1.0, 5.0)
    a = grid_dirichlet(mp, resolution=80)
    b = grid_dirichlet(rotate_domain(mp, phi), resolution=80)
    assert b == pytest.approx(a, rel=1e-6)


@pytest.mark.parametrize("beta", [1 / 3, 2 / 5, 2 / 3])
def test_corner_slope(beta):
    res = renormalized_dirichlet(corner_map(beta), beta, [10, 20, 40, 80], resolution=60)
    assert res.slope == pytest.approx(corner_constant(beta), rel=1e-2)


def test_half_corner_is_flat():
    assert corner_constant(0.5) == 0.0
    res = renormalized_dirichlet(corner_map(0.5), 0.5, [10, 20, 40], resolution=30)
    assert abs(res.value) < 1e-12 and abs(res.slope) < 1e-12


def test_wrong_constant_does_not_converge():
    with pytest.raises(NonConvergent):
        renormalized_dirichlet(corner_map(0.3), 0.4, [10, 20, 40, 80], resolution=30)


def test_validation():
    with pytest.raises(ConfigError):
        corner_map(1.0)
    with pytest.raises(ConfigError):
        Sector(2.0, 1.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        renormalized_dirichlet(corner_map(0.3), 0.3, [10])
    with pytest.raises(ConfigError):
        grid_dirichlet(identity_map(Sector(1, 2, 0, 1)), spacing="cubic")


@given(st.floats(-10.0, -2.0))
def test_point_coefficients_match_under_weight_change(rho):
    out = theorem_identity_trivial_checks(rho)
    assert out["radial_coefficients_match"] and out["chordal_coefficients_match"]


@pytest.mark.parametrize("rho", [-1.0, 0.0, 2.0])
def test_identity_case(rho):
    out = theorem_identity_trivial_checks(rho)
    assert out["radial_coefficients_match"] and out["chordal_coefficients_match"]
    assert out["identity_case_ok"]
