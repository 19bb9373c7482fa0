"""Discrete Loewner inversion: recover driving and capacity times from a polyline."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .driving import DrivingFunction, Setting, from_samples
from .errors import DegenerateStep, SelfIntersection, VertexSpacingError
from .loewner import (
    Curve,
    Domain,
    Parametrization,
    disk_slit_forward,
    slit_forward,
    trace,
)

__all__ = ["ZipperResult", "extract_driving", "capacity_reparametrize", "hausdorff"]


@dataclass(frozen=True)
class ZipperResult:
    drive: DrivingFunction
    capacity_times: np.ndarray
    residual: float
    extra_images: Optional[np.ndarray] = None


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    # local import keeps the module graph acyclic
    from .flowline import polyline_hausdorff

    return polyline_hausdorff(a, b)


def extract_driving(
    curve: Curve,
    setting: Optional[str] = None,
    extra_points: Sequence[complex] = (),
    max_spacing_ratio: Optional[float] = 10.0,
    residual: bool = True,
) -> ZipperResult:
    """Peel the vertices of ``curve`` one at a time with vertical-slit maps.

    In the half-plane the curve must start at a real point (normally 0);
    in the disk it must start on the unit circle (normally at 1).  Each peel
    sends the current vertex to the tip of a slit whose base gives the next
    driving value and whose height gives the capacity increment.
    ``extra_points`` are pushed through the same maps and their images after
    every peel are returned (row k = after k peels).
    """
    pts = np.asarray(curve.points, dtype=complex)
    dom = setting or (curve.domain.value if isinstance(curve.domain, Domain) else str(curve.domain))
    radial = dom in ("D", "radial", Domain.D)
    if pts.size < 3:
        raise DegenerateStep("need at least three vertices")
    if np.any(np.abs(np.diff(pts)) == 0):
        raise DegenerateStep("consecutive vertices coincide")

    n = pts.size - 1
    extra = np.asarray(extra_points, dtype=complex).ravel()
    ne = extra.size
    z = np.concatenate([pts[1:], extra])
    W = np.empty(n + 1)
    tt = np.empty(n + 1)
    imgs = np.empty((n + 1, ne), dtype=complex)
    imgs[0] = extra
    tt[0] = 0.0
    if radial:
        if abs(abs(pts[0]) - 1.0) > 1e-9:
            raise SelfIntersection("disk curve must start on the unit circle")
        if np.any(np.abs(pts[1:]) >= 1.0):
            raise SelfIntersection("disk curve leaves the open disk")
        W[0] = cmath.phase(pts[0])
        for k in range(n):
            zk = z[k]
            r = abs(zk)
            if not r < 1.0:
                raise SelfIntersection(f"vertex {k + 1} left the disk while peeling")
            if r == 0.0:
                raise DegenerateStep("vertex reached the interior reference point")
            a = W[k] + math.remainder(cmath.phase(zk) - W[k], 2.0 * math.pi)
            delta = math.log((1.0 + r) ** 2 / (4.0 * r))
            if delta <= 0.0:
                raise DegenerateStep(f"vertex {k + 1} lies on the boundary")
            W[k + 1] = a
            tt[k + 1] = tt[k] + delta
            z[k + 1:] = disk_slit_forward(z[k + 1:], a, delta)
            if ne:
                imgs[k + 1] = z[n:]
    else:
        if abs(pts[0].imag) > 1e-12:
            raise SelfIntersection("half-plane curve must start on the real line")
        if np.any(pts[1:].imag <= 0.0):
            raise SelfIntersection("half-plane curve touches or crosses the real line")
        W[0] = pts[0].real
        for k in range(n):
            a, b = z[k].real, z[k].imag
            if not b > 0.0:
                raise SelfIntersection(f"vertex {k + 1} left the half-plane while peeling")
            d = 0.25 * b * b
            W[k + 1] = a
            tt[k + 1] = tt[k] + d
            z[k + 1:] = slit_forward(z[k + 1:], a, d)
            if ne:
                imgs[k + 1] = z[n:]

    steps = np.diff(tt)
    if np.any(steps <= 0):
        raise DegenerateStep("capacity increment vanished")
    if max_spacing_ratio is not None:
        med = float(np.median(steps))
        worst = float(np.max(steps))
        if worst > max_spacing_ratio * med:
            raise VertexSpacingError(
                f"capacity step {worst:.3g} exceeds {max_spacing_ratio:g}x the median {med:.3g}"
            )
    st = Setting.RADIAL if radial else Setting.CHORDAL
    drive = from_samples(tt, W, st, family="zipper")
    res = math.nan
    if residual:
        back = trace(drive, n_steps=2 * n, T=float(tt[-1]))
        res = hausdorff(pts, back.points)
    return ZipperResult(drive, tt, res, imgs if ne else None)


def capacity_reparametrize(curve: Curve, n_out: Optional[int] = None, setting: Optional[str] = None) -> Curve:
    """Resample the polyline at uniform capacity (or conformal-radius) increments."""
    zr = extract_driving(curve, setting=setting, max_spacing_ratio=None, residual=False)
    tt = zr.capacity_times
    m = curve.points.size if n_out is None else int(n_out) + 1
    tu = np.linspace(0.0, tt[-1], m)
    p = curve.points
    pts = np.interp(tu, tt, p.real) + 1j * np.interp(tu, tt, p.imag)
    par = Parametrization.CONFORMAL_RADIUS if zr.drive.setting is Setting.RADIAL else Parametrization.CAPACITY
    return Curve(pts, par, curve.domain, tu)
