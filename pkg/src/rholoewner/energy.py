"""rho-Loewner energy: direct integral, integrated formulas, bounds and checks."""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .driving import DrivingFunction, FPKind, ForcePointSpec, Setting
from .errors import ConfigError
from .loewner import Curve, Domain, LoewnerTrack, track_force_point
from .zipper import extract_driving

__all__ = [
    "Certificate",
    "EnergyReport",
    "CoordinateChange",
    "rho_energy_direct",
    "rho_energy_integrated",
    "base_energy",
    "interval_contributions",
    "is_absolutely_continuous",
    "curve_energy",
    "coordinate_change_check",
    "min_energy_through_point",
    "welding_track",
    "welding_lower_bound",
    "bound_certificates",
    "energy_additivity_check",
]


@dataclass
class Certificate:
    name: str
    lower: float
    value: float
    upper: float
    ok: bool
    note: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass
class EnergyReport:
    direct: float
    integrated: Optional[float]
    terms: dict
    discrepancy: Optional[float]
    certificates: List[Certificate] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "direct": self.direct,
            "integrated": self.integrated,
            "terms": dict(self.terms),
            "discrepancy": self.discrepancy,
            "certificates": [
                {"name": c.name, "bound": [c.lower, c.upper], "value": c.value, "ok": c.ok}
                for c in self.certificates
            ],
            "diagnostics": dict(self.diagnostics),
        }


# -- integrands ---------------------------------------------------------------


def _drift(track: LoewnerTrack) -> np.ndarray:
    """Unit-rho drift at the nodes: Re 1/(W - z) chordal, cot((w - v)/2)/2 radial."""
    if track.setting is Setting.RADIAL:
        return 0.5 / np.tan((track.driving - track.force) / 2.0)
    return np.real(1.0 / (track.driving - track.force))


def interval_contributions(track: LoewnerTrack, rho: float) -> np.ndarray:
    """Energy carried by each grid interval of the track.

    Analytic driving: trapezoid rule on (dW/dt - rho*drift)^2 / 2.  Sampled
    driving: the derivative is the secant slope of the interval and the
    drift is sampled at both ends.
    """
    t = track.times
    dt = np.diff(t)
    F = _drift(track)
    if track.drive.has_analytic_deriv:
        f2 = (track.driving_derivative - rho * F) ** 2
        return 0.25 * dt * (f2[:-1] + f2[1:])
    s = np.diff(track.driving) / dt
    return 0.25 * dt * ((s - rho * F[:-1]) ** 2 + (s - rho * F[1:]) ** 2)


def is_absolutely_continuous(drive: DrivingFunction, factor: float = 1.5) -> bool:
    """Heuristic: the discrete Dirichlet energy of the samples must not keep
    growing by ``factor`` over two dyadic refinements."""
    if not drive.is_sampled:
        return True
    ts, vs = drive.samples
    if ts.size < 9:
        return True
    e = []
    for step in (4, 2, 1):
        tt, vv = ts[::step], vs[::step]
        e.append(0.5 * float(np.sum(np.diff(vv) ** 2 / np.diff(tt))))
    if e[0] <= 0:
        return True
    return not (e[1] > factor * e[0] and e[2] > factor * e[1])


def _track(drive, fp, T, dt, track):
    if track is not None:
        return track
    return track_force_point(drive, fp, T, dt=dt)


def rho_energy_direct(
    drive: DrivingFunction,
    fp: ForcePointSpec,
    T: float,
    dt: Optional[float] = None,
    track: Optional[LoewnerTrack] = None,
) -> float:
    """1/2 * integral of (dW/dt - rho * drift)^2 over [0, T].

    Returns ``math.inf`` when sampled driving looks rough under refinement.
    """
    if not is_absolutely_continuous(drive):
        return math.inf
    tr = _track(drive, fp, T, dt, track)
    return float(np.sum(interval_contributions(tr, fp.rho)))


def base_energy(track: LoewnerTrack) -> float:
    return float(np.sum(interval_contributions(track, 0.0)))


def _terms(track: LoewnerTrack, rho: float) -> dict:
    fp = track.fp
    base = base_energy(track)
    if fp.kind is FPKind.INTERIOR_CHORDAL:
        s = track.sin_theta
        log_sin = math.log(s[-1] / s[0])
        y = track.y
        log_deriv = float(track.log_abs_deriv[-1] + math.log(y[-1] / y[0]))
        return {
            "base_energy": base,
            "log_sin_term": rho * log_sin,
            "log_deriv_term": -rho * (8.0 + rho) / 8.0 * log_deriv,
            "log_gap_term": 0.0,
            "log_sin": log_sin,
            "log_deriv": log_deriv,
        }
    if fp.kind is FPKind.BOUNDARY_CHORDAL:
        gap_T = abs(track.driving[-1] - track.force[-1])
        log_gap = math.log(gap_T / abs(fp.value))
        log_deriv = float(track.logderiv[-1])
        return {
            "base_energy": base,
            "log_sin_term": 0.0,
            "log_deriv_term": -rho * (4.0 + rho) / 4.0 * log_deriv,
            "log_gap_term": -rho * log_gap,
            "log_gap": log_gap,
            "log_deriv": log_deriv,
        }
    w, v = track.driving, track.force
    gap_T = abs(2.0 * math.sin((w[-1] - v[-1]) / 2.0))
    gap_0 = abs(2.0 * math.sin(fp.value / 2.0))
    log_gap = math.log(gap_T / gap_0)
    # |g_T'(e^{iv0})|^2 |g_T'(0)| with |g_T'(0)| = e^T
    log_deriv = float(2.0 * track.logderiv[-1] + track.T)
    return {
        "base_energy": base,
        "log_sin_term": 0.0,
        "log_deriv_term": -rho * (4.0 + rho) / 8.0 * log_deriv,
        "log_gap_term": -rho * log_gap,
        "log_gap": log_gap,
        "log_deriv": log_deriv,
    }


def rho_energy_integrated(
    drive: DrivingFunction,
    fp: ForcePointSpec,
    T: float,
    dt: Optional[float] = None,
    track: Optional[LoewnerTrack] = None,
) -> EnergyReport:
    """Energy through the integrated formula, alongside the direct value."""
    tr = _track(drive, fp, T, dt, track)
    rho = fp.rho
    direct = rho_energy_direct(drive, fp, T, track=tr)
    terms = _terms(tr, rho)
    integrated = terms["base_energy"] + terms["log_sin_term"] + terms["log_deriv_term"] + terms["log_gap_term"]
    diag = {"T": tr.T, "n_nodes": int(tr.times.size)}
    if fp.kind is FPKind.INTERIOR_CHORDAL:
        diag["sin_theta_T"] = float(tr.sin_theta[-1])
    return EnergyReport(direct, float(integrated), terms, abs(direct - integrated), [], diag)


# -- coordinate change -------------------------------------------------------


@dataclass(frozen=True)
class CoordinateChange:
    lhs: float
    rhs: float
    discrepancy: float
    relative: float
    raw: tuple = ()


def curve_energy(curve: Curve, fp: ForcePointSpec, max_spacing_ratio: Optional[float] = 10.0) -> float:
    """Energy of a polyline: zipper the driving, then integrate directly."""
    zr = extract_driving(curve, max_spacing_ratio=max_spacing_ratio, residual=False)
    return rho_energy_direct(zr.drive, fp, float(zr.capacity_times[-1]))


def _mobius_sides(curve: Curve, rho: float, force):
    pts = curve.points
    if curve.domain in (Domain.D, "D"):
        v0 = float(force)
        theta0 = math.pi - v0 / 2.0
        z0 = cmath.exp(1j * theta0)
        lam = z0.conjugate() / z0
        w = pts
        back = (w * z0.conjugate() - lam * z0) / (w - lam)
        back = back.real + 1j * np.maximum(back.imag, 0.0)
        back[0] = back[0].real
        left = (curve, ForcePointSpec.radial(v0, rho))
        right = (Curve(back, domain=Domain.H), ForcePointSpec.interior(z0, -6.0 - rho))
        return left, right
    force = complex(force)
    if force.imag == 0.0:
        c = force.real
        mapped = pts / (1.0 - pts / c)
        mapped[0] = mapped[0].real
        left = (curve, ForcePointSpec.boundary(c, rho))
        right = (Curve(mapped, domain=Domain.H), ForcePointSpec.boundary(-c, -6.0 - rho))
        return left, right
    z0 = force
    lam = z0.conjugate() / z0
    mapped = lam * (pts - z0) / (pts - z0.conjugate())
    v0 = (-2.0 * cmath.phase(z0)) % (2.0 * math.pi)
    left = (curve, ForcePointSpec.interior(z0, rho))
    right = (Curve(mapped, domain=Domain.D), ForcePointSpec.radial(v0, -6.0 - rho))
    return left, right


def coordinate_change_check(
    curve: Curve,
    rho: float,
    force,
    extrapolate: bool = True,
    max_spacing_ratio: Optional[float] = 10.0,
) -> CoordinateChange:
    """Compare the energy of ``curve`` with force point ``force`` against the
    energy, with weight -6 - rho, of its image under the Mobius map that swaps
    the target and the force point.

    Half-plane curves from 0 toward infinity take a real force point c
    (image domain: H, force point at the image of infinity) or an interior
    z0 (image domain: the disk, radial).  Disk curves from 1 toward 0 take a
    boundary angle v0.  Both sides go through the zipper.  With
    ``extrapolate`` each side is Richardson-extrapolated from the full and
    the every-other-vertex polylines, cancelling the first-order
    discretisation error.
    """
    (c1, fp1), (c2, fp2) = _mobius_sides(curve, float(rho), force)

    def side(c, fp):
        full = curve_energy(c, fp, max_spacing_ratio)
        if not extrapolate:
            return full, (full,)
        half_pts = c.points[::2]
        if (c.points.size - 1) % 2:
            half_pts = np.concatenate([half_pts, c.points[-1:]])
        half = curve_energy(Curve(half_pts, domain=c.domain), fp, max_spacing_ratio)
        return 2.0 * full - half, (full, half)

    lhs, raw1 = side(c1, fp1)
    rhs, raw2 = side(c2, fp2)
    disc = abs(lhs - rhs)
    rel = disc / max(abs(lhs), abs(rhs), 1e-300)
    return CoordinateChange(lhs, rhs, disc, rel, (raw1, raw2))


def min_energy_through_point(z0: complex) -> float:
    """Least chordal energy of a curve from 0 through z0."""
    z0 = complex(z0)
    if z0.imag <= 0:
        raise ConfigError("z0 must lie in the upper half-plane")
    return -8.0 * math.log(math.sin(cmath.phase(z0)))


# -- welding bound -----------------------------------------------------------


def welding_track(drive: DrivingFunction, rho: float, x0: float, T: float, dt=None) -> LoewnerTrack:
    """Track x0 together with the partner point y0 = -2 x0 / (2 + rho)."""
    if rho <= -2 or x0 <= 0:
        raise ConfigError("welding bound needs rho > -2 and x0 > 0")
    y0 = -2.0 * x0 / (2.0 + rho)
    return track_force_point(drive, ForcePointSpec.boundary(x0, rho), T, dt=dt, aux_points=[y0])


def welding_lower_bound(track: LoewnerTrack, rho: float, x0: float):
    """Return (bound, r_T, r_0) with r_t = (W_t - y_t)/(x_t - y_t)."""
    if track.aux.shape[1] < 1:
        raise ConfigError("track must co-integrate y0 (use welding_track)")
    y = np.real(track.aux[:, 0])
    x = np.real(track.force)
    W = track.driving
    r = (W - y) / (x - y)
    r0 = 2.0 / (4.0 + rho)
    rT = float(r[-1])
    bound = -(2.0 + rho) * math.log((1.0 - rT) / (1.0 - r0)) - 2.0 * math.log(rT / r0)
    return bound, rT, r0


# -- bounds --------------------------------------------------------------------


def _cum(track: LoewnerTrack, rho: float) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(interval_contributions(track, rho))])


def _sandwich(name, lo, val, hi, tol, note=""):
    ok = bool(np.all(lo <= val + tol) and np.all(val <= hi + tol))
    margin = float(min(np.min(val - lo), np.min(hi - val)))
    return Certificate(name, float(np.atleast_1d(lo)[-1]), float(np.atleast_1d(val)[-1]),
                       float(np.atleast_1d(hi)[-1]), ok, note or f"min margin {margin:.3e}")


def bound_certificates(
    drive: DrivingFunction,
    fp: ForcePointSpec,
    T: float,
    dt: Optional[float] = None,
    tol: float = 1e-6,
) -> List[Certificate]:
    """Evaluate every applicable bound at every grid time of the track.

    Some bounds are tight at t = 0, where quadrature error of order dt^2 can
    push a margin slightly negative; ``tol`` is a relative allowance for that.
    """
    rho = fp.rho
    certs: List[Certificate] = []
    if fp.kind is FPKind.INTERIOR_CHORDAL:
        tr = track_force_point(drive, fp, T, dt=dt)
        I = _cum(tr, rho)
        IC = _cum(tr, 0.0)
        s = tr.sin_theta
        ls = np.log(s / s[0])
        ld = tr.log_abs_deriv + np.log(tr.y / tr.y[0])
        scale = tol * (1.0 + np.abs(I) + np.abs(IC))
        if rho < -4.0:
            hi_m = max(1.0, -(4.0 + rho) / 4.0)
            lo_m = min(1.0, -(4.0 + rho) / 4.0)
            certs.append(_sandwich("interior_energy_sandwich", lo_m * (lo_m * IC + rho * ls), I,
                                   hi_m * (hi_m * IC + rho * ls), scale))
        else:
            certs.append(Certificate("interior_energy_sandwich", math.nan, float(I[-1]), math.nan, True,
                                     "skipped: needs rho < -4"))
        certs.append(_sandwich("interior_log_deriv_sandwich", 2.0 * ls - 0.5 * IC, ld, np.zeros_like(ld), scale))
        certs.append(Certificate("sin_theta_at_end", math.nan, float(s[-1]), math.nan, True,
                                 f"-log sin(theta_T) = {-math.log(s[-1]):.6g}"))
    elif fp.kind is FPKind.BOUNDARY_CHORDAL:
        if rho <= -2.0:
            certs.append(Certificate("boundary_energy_sandwich", math.nan, math.nan, math.nan, True,
                                     "skipped: needs rho > -2"))
            return certs
        x0 = fp.value
        d = drive if x0 > 0 else drive.rescaled(-1.0)
        tr = welding_track(d, rho, abs(x0), T, dt=dt)
        I = _cum(tr, rho)
        IC = _cum(tr, 0.0)
        lg = np.log(np.abs(tr.driving - tr.force) / abs(x0))
        scale = tol * (1.0 + np.abs(I) + np.abs(IC))
        hi_m = max((rho + 2.0) / 2.0, 1.0)
        lo_m = min((rho + 2.0) / 2.0, 1.0)
        certs.append(_sandwich("boundary_energy_sandwich", lo_m * (lo_m * IC - abs(rho) * lg), I,
                               hi_m * (hi_m * IC + abs(rho) * lg), scale))
        y = np.real(tr.aux[:, 0])
        x = tr.force
        r = (tr.driving - y) / (x - y)
        r0 = 2.0 / (4.0 + rho)
        wb = -(2.0 + rho) * np.log((1.0 - r) / (1.0 - r0)) - 2.0 * np.log(r / r0)
        certs.append(_sandwich("welding_lower_bound", wb, I, np.full_like(I, np.inf), scale))
    else:
        tr = track_force_point(drive, fp, T, dt=dt)
        # plain radial energy vs. chordal energy aimed at e^{i v0}
        IR = _cum(tr, 0.0)
        ID = _cum(tr, -6.0)
        s = np.abs(np.sin((tr.driving - tr.force) / 2.0))
        ls = np.log(s / s[0])
        scale = tol * (1.0 + IR + ID)
        certs.append(_sandwich("radial_chordal_sandwich", 0.5 * (0.5 * ID - 6.0 * ls), IR, ID - 6.0 * ls, scale))
        certs.append(_sandwich("radial_chordal_quarter", 0.25 * ID, IR, np.full_like(IR, np.inf), scale,
                               note="" if fp.value == math.pi else "force point not antipodal"))
    return certs


def energy_additivity_check(
    drive: DrivingFunction,
    fp: ForcePointSpec,
    T: float,
    t_split: float,
    dt: Optional[float] = None,
) -> float:
    """|I[0,T] - (I[0,s] + I of the mapped-out remainder)|."""
    if not 0.0 < t_split < T:
        raise ConfigError("need 0 < t_split < T")
    total = rho_energy_direct(drive, fp, T, dt=dt)
    tr1 = track_force_point(drive, fp, t_split, dt=dt)
    first = rho_energy_direct(drive, fp, t_split, track=tr1)
    w_s = float(tr1.driving[-1])
    f_s = tr1.force[-1]
    if fp.kind is FPKind.BOUNDARY_RADIAL:
        fp2 = ForcePointSpec.radial(float(f_s - w_s) % (2.0 * math.pi), fp.rho)
    elif fp.kind is FPKind.BOUNDARY_CHORDAL:
        fp2 = ForcePointSpec.boundary(float(np.real(f_s)) - w_s, fp.rho)
    else:
        fp2 = ForcePointSpec.interior(complex(f_s) - w_s, fp.rho)
    second = rho_energy_direct(drive.shifted(t_split), fp2, T - t_split, dt=dt)
    return abs(total - (first + second))
