import cmath
import math

import numpy as np
import pytest

from rholoewner import driving as drv
from rholoewner.errors import DegenerateStep, SelfIntersection, VertexSpacingError
from rholoewner.loewner import Curve, Domain, trace
from rholoewner.zipper import capacity_reparametrize, extract_driving


def test_recovers_driving_of_a_trace():
    d = drv.make_chordal_sle0(2.0, 1.0)
    c = trace(d, n_steps=400, T=1.0)
    zr = extract_driving(c)
    t = zr.capacity_times
    assert np.max(np.abs(zr.drive.eval(t) - d.eval(t))) < 2e-2
    assert zr.residual < 1e-2 * c.diameter


def test_roundtrip_improves_with_resolution():
    d = drv.make_trigonometric([0.5, -0.2], [0.1, 0.9], 1.0)
    res = [extract_driving(trace(d, n_steps=n, T=1.0)).residual for n in (100, 200, 400)]
    assert res[2] < res[1] < res[0]
    order = math.log2(res[0] / res[2]) / 2
    assert order >= 0.5


def test_radial_roundtrip():
    d = drv.make_radial_sle0(1.0, 2.5)
    c = trace(d, n_steps=400, T=1.0)
    zr = extract_driving(c)
    assert zr.drive.setting is drv.Setting.RADIAL
    np.testing.assert_allclose(zr.capacity_times[1:], c.times[1:], rtol=2e-2)
    assert zr.residual < 1e-2


def test_extra_points_follow_the_maps():
    # vertical segment: the maps compose to sqrt(z^2 + 4t)
    T = 1.0
    c = trace(drv.make_zero(), n_steps=200, T=T)
    zr = extract_driving(c, extra_points=[1.0 + 0j, 0.5 + 1j], residual=False)
    assert zr.extra_images.shape == (201, 2)
    np.testing.assert_allclose(zr.extra_images[-1], np.sqrt(np.array([1.0, 0.5 + 1j]) ** 2 + 4 * T), rtol=1e-6)


def test_rejects_bad_polylines():
    with pytest.raises(SelfIntersection):
        extract_driving(Curve(np.array([0, 0.1 + 1j, 0.2 - 0.5j, 1j])), residual=False)
    with pytest.raises(DegenerateStep):
        extract_driving(Curve(np.array([0, 1j, 1j, 2j])), residual=False)
    with pytest.raises(DegenerateStep):
        extract_driving(Curve(np.array([0, 1j])), residual=False)
    with pytest.raises(SelfIntersection):
        extract_driving(Curve(np.array([0.5, 0.5j, 1j]), domain=Domain.D), residual=False)


def test_spacing_guard():
    pts = np.concatenate([1j * np.linspace(0, 1, 50), [1j + 5j]])
    with pytest.raises(VertexSpacingError):
        extract_driving(Curve(pts), residual=False)
    assert extract_driving(Curve(pts), max_spacing_ratio=None, residual=False).capacity_times[-1] > 0


def test_ray_energy_grows_with_resolution():
    d = drv.make_ray(2.0)
    angle = d.params["angle"]
    energies = []
    for n in (100, 400, 1600):
        r = np.linspace(0, 1, n + 1)
        zr = extract_driving(Curve(r * cmath.exp(1j * angle)), residual=False)
        ts, vs = zr.drive.samples
        energies.append(0.5 * np.sum(np.diff(vs) ** 2 / np.diff(ts)))
    assert energies[0] < energies[1] < energies[2]
    # logarithmic growth: equal increments per factor of four
    inc = np.diff(energies)
    assert inc[1] == pytest.approx(inc[0], rel=0.2)


def test_capacity_reparametrization_is_uniform():
    d = drv.make_chordal_sle0(1.0, 1.0)
    c = trace(d, n_steps=300, T=1.0)
    # arc-length resample, then back to capacity
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(c.points)))])
    su = np.linspace(0, s[-1], 301)
    arc = Curve(np.interp(su, s, c.points.real) + 1j * np.interp(su, s, c.points.imag))
    back = capacity_reparametrize(arc, n_out=100)
    np.testing.assert_allclose(np.diff(back.times), back.times[-1] / 100)
    assert back.times[-1] == pytest.approx(1.0, rel=2e-2)
