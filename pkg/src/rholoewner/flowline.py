"""Harmonic angle fields whose flow-lines are SLE_0(rho) curves."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import BranchJump, ConfigError
from .loewner import Curve, Domain, Parametrization

__all__ = [
    "FieldKind",
    "FlowField",
    "field_eval",
    "integrate_flowline",
    "curve_distance",
    "polyline_hausdorff",
    "self_intersects",
]


class FieldKind(str, enum.Enum):
    BOUNDARY = "boundary"
    INTERIOR = "interior"
    WHOLEPLANE = "wholeplane"
    WHOLEPLANE_MINUS2 = "wholeplane_minus2"


@dataclass(frozen=True)
class FlowField:
    kind: FieldKind
    rho: float
    x0: Optional[float] = None
    z0: Optional[complex] = None
    v0: Optional[float] = None

    @classmethod
    def boundary(cls, rho, x0):
        if x0 == 0:
            raise ConfigError("x0 must be nonzero")
        return cls(FieldKind.BOUNDARY, float(rho), x0=float(x0))

    @classmethod
    def interior(cls, rho, z0):
        z0 = complex(z0)
        if z0.imag <= 0:
            raise ConfigError("z0 must lie in the upper half-plane")
        return cls(FieldKind.INTERIOR, float(rho), z0=z0)

    @classmethod
    def wholeplane(cls, rho):
        return cls(FieldKind.WHOLEPLANE, float(rho))

    @classmethod
    def wholeplane_minus2(cls, v0):
        return cls(FieldKind.WHOLEPLANE_MINUS2, -2.0, v0=float(v0))

    @property
    def constant(self) -> float:
        """Additive constant of the whole-plane field."""
        if self.kind is FieldKind.WHOLEPLANE_MINUS2:
            return 1.5 * math.pi - self.v0 / 2.0
        return math.pi

    @property
    def half_plane(self) -> bool:
        return self.kind in (FieldKind.BOUNDARY, FieldKind.INTERIOR)

    @property
    def singular_points(self):
        if self.kind is FieldKind.BOUNDARY:
            return (0j, complex(self.x0))
        if self.kind is FieldKind.INTERIOR:
            return (0j, self.z0)
        return (0j,)

    def initial_branch(self, start: complex) -> Tuple[float, ...]:
        """Branch state at the start point of a flow-line."""
        start = complex(start)
        if self.kind is FieldKind.INTERIOR:
            # lift so that arg(start - z0) is near theta0 + pi
            base = cmath.phase(self.z0) + math.pi
            a = cmath.phase(start - self.z0)
            return (base + math.remainder(a - base, 2.0 * math.pi),)
        if self.kind in (FieldKind.WHOLEPLANE, FieldKind.WHOLEPLANE_MINUS2):
            return (cmath.phase(start),)
        return ()


def _lift(prev: float, angle: float, guard: float) -> float:
    d = math.remainder(angle - prev, 2.0 * math.pi)
    if abs(d) > guard:
        raise BranchJump(f"lifted argument jumped by {d:.3f} rad")
    return prev + d


def _arg_upper(z: complex) -> float:
    # principal argument, mapped into [0, pi] for points of the closed upper half-plane
    a = cmath.phase(z)
    if a >= 0.0:
        return a
    return math.pi if a < -math.pi / 2 else 0.0


def field_eval(field: FlowField, z: complex, branch: Tuple[float, ...] = (), guard: float = 0.9 * math.pi):
    """Return (h(z), new branch state)."""
    z = complex(z)
    rho = field.rho
    k = field.kind
    if k is FieldKind.BOUNDARY:
        x0 = field.x0
        az = _arg_upper(z)
        ax = _arg_upper(z - x0)
        if x0 > 0:
            h = math.pi * (1.0 + rho / 2.0) - az - (rho / 2.0) * ax
        else:
            h = math.pi - az - (rho / 2.0) * ax
        return h, ()
    if k is FieldKind.INTERIOR:
        if not branch:
            branch = field.initial_branch(z)
        lifted = _lift(branch[0], cmath.phase(z - field.z0), guard)
        h = math.pi - _arg_upper(z) - (rho / 4.0) * (lifted + _arg_upper(z - field.z0.conjugate()))
        return h, (lifted,)
    if not branch:
        branch = field.initial_branch(z)
    lifted = _lift(branch[0], cmath.phase(z), guard)
    if k is FieldKind.WHOLEPLANE:
        h = (6.0 + rho) / 4.0 * lifted + math.pi
    else:
        h = lifted + field.constant
    return h, (lifted,)


def integrate_flowline(
    field: FlowField,
    start: complex,
    ds: float = 1e-3,
    max_steps: int = 200000,
    max_length: Optional[float] = None,
    max_radius: Optional[float] = None,
    min_radius: Optional[float] = None,
    approach_tol: float = 1e-6,
    branch: Optional[Tuple[float, ...]] = None,
) -> Curve:
    """RK4 on eta' = exp(i h(eta)), arc-length parametrised.

    The step is ``ds`` but never more than 5% of the distance to the nearest
    singular point, so the lifted arguments move slowly.  Integration stops
    on leaving the domain, coming within ``approach_tol`` (relative to the
    force-point scale) of a singular point other than the start, exceeding
    ``max_length``/``max_radius``, or after ``max_steps``.  ``branch``
    overrides the initial lifted argument (whole-plane fields starting off
    the principal branch).
    """
    z = complex(start)
    branch = field.initial_branch(z) if branch is None else tuple(float(b) for b in branch)
    sing = field.singular_points
    scale = max(abs(s) for s in sing) or 1.0
    pts = [z]
    length = [0.0]
    s_tot = 0.0

    def vel(p, br):
        h, br2 = field_eval(field, p, br)
        return cmath.exp(1j * h), br2

    for _ in range(max_steps):
        dist = min(abs(z - s) for s in sing)
        h = min(ds, 0.05 * dist)
        if h <= 0:
            break
        k1, b1 = vel(z, branch)
        k2, _ = vel(z + 0.5 * h * k1, b1)
        k3, _ = vel(z + 0.5 * h * k2, b1)
        k4, _ = vel(z + h * k3, b1)
        zn = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if field.half_plane and zn.imag <= 0.0:
            break
        _, branch = field_eval(field, zn, b1)
        z = zn
        s_tot += h
        pts.append(z)
        length.append(s_tot)
        if any(abs(z - s) < approach_tol * scale for s in sing[1:]):
            break
        if field.kind in (FieldKind.WHOLEPLANE, FieldKind.WHOLEPLANE_MINUS2) and abs(z) < approach_tol * scale:
            break
        if min_radius is not None and abs(z) < min_radius:
            break
        if max_length is not None and s_tot >= max_length:
            break
        if max_radius is not None and abs(z) >= max_radius:
            break
    dom = Domain.H if field.half_plane else Domain.PLANE
    return Curve(np.array(pts), Parametrization.ARC_LENGTH, dom, np.array(length))


def _point_segment_dist(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance matrix from points p (m,) to segments [a, b] (n,)."""
    ab = b - a
    L2 = np.abs(ab) ** 2
    L2 = np.where(L2 == 0, 1.0, L2)
    rel = p[:, None] - a[None, :]
    t = np.clip(np.real(rel * np.conj(ab)[None, :]) / L2[None, :], 0.0, 1.0)
    return np.abs(rel - t * ab[None, :])


def _directed(a: np.ndarray, b: np.ndarray, chunk: int = 512) -> float:
    if b.size == 1:
        return float(np.max(np.abs(a - b[0])))
    # vertices and midpoints of a against the segments of b
    probe = np.concatenate([a, 0.5 * (a[1:] + a[:-1])]) if a.size > 1 else a
    s0, s1 = b[:-1], b[1:]
    worst = 0.0
    for i in range(0, probe.size, chunk):
        d = _point_segment_dist(probe[i:i + chunk], s0, s1).min(axis=1)
        worst = max(worst, float(d.max()))
    return worst


def polyline_hausdorff(a, b) -> float:
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    return max(_directed(a, b), _directed(b, a))


def curve_distance(a: Curve, b: Curve) -> float:
    """Symmetric Hausdorff distance between two polylines."""
    return polyline_hausdorff(a.points, b.points)


def _point_polyline_dist(p: complex, b: np.ndarray) -> float:
    if b.size < 2:
        return float(np.min(np.abs(b - p))) if b.size else math.inf
    return float(_point_segment_dist(np.array([p]), b[:-1], b[1:]).min())


def self_intersects(points, root: Optional[complex] = None, trim: float = 0.02, tol: float = 1e-3) -> bool:
    """Whether a polyline crosses or touches itself away from its root.

    Vertices within ``trim``*diameter of ``root`` (default: the first point)
    are dropped, so loops that close up at their root are not flagged.  A
    proper crossing is found with shapely; an endpoint landing on an earlier
    part of the curve (within ``tol``*diameter) also counts.
    """
    from shapely.geometry import LineString

    pts = np.asarray(points, dtype=complex).ravel()
    root = pts[0] if root is None else complex(root)
    diam = float(np.max(np.abs(pts - pts[0]))) or 1.0
    keep = np.abs(pts - root) > trim * diam
    # split into runs of kept vertices
    runs, cur = [], []
    for z, k in zip(pts, keep):
        if k:
            cur.append(z)
        elif cur:
            runs.append(np.array(cur))
            cur = []
    if cur:
        runs.append(np.array(cur))
    for run in runs:
        if run.size >= 3 and not LineString(np.column_stack([run.real, run.imag])).is_simple:
            return True
    for run in runs:
        if run.size < 3:
            continue
        arc = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(run)))])
        gap = 10.0 * tol * diam
        if _point_polyline_dist(run[-1], run[arc < arc[-1] - gap]) < tol * diam:
            return True
        if _point_polyline_dist(run[0], run[arc > gap]) < tol * diam:
            return True
    return False
