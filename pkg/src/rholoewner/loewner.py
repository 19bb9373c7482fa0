"""Forward Loewner flow: point flow, force-point tracking and slit-map traces."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .driving import DrivingFunction, FPKind, ForcePointSpec, Setting
from .errors import (
    ConfigError,
    ForcePointApproach,
    HorizonError,
    NumericalBlowup,
    StepSizeUnderflow,
)

__all__ = [
    "Parametrization",
    "Domain",
    "Curve",
    "StopReason",
    "LoewnerTrack",
    "slit_forward",
    "slit_inverse",
    "disk_slit_forward",
    "disk_slit_inverse",
    "flow_points",
    "track_force_point",
    "trace",
    "trace_wholeplane",
    "wholeplane_intersection_parameter",
]


class Parametrization(str, enum.Enum):
    CAPACITY = "half_plane_capacity"
    CONFORMAL_RADIUS = "conformal_radius"
    ARC_LENGTH = "arc_length"
    UNKNOWN = "unknown"


class Domain(str, enum.Enum):
    H = "H"
    D = "D"
    SLIT = "Sigma"
    PLANE = "C"


@dataclass(frozen=True)
class Curve:
    points: np.ndarray
    parametrization: Parametrization = Parametrization.UNKNOWN
    domain: Domain = Domain.H
    times: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        if self.times is not None:
            object.__setattr__(self, "times", np.asarray(self.times, dtype=float))

    def __len__(self):
        return self.points.size

    @property
    def diameter(self) -> float:
        p = self.points
        if p.size > 4000:
            p = p[:: p.size // 2000 + 1]
        return float(np.max(np.abs(p[:, None] - p[None, :])))

    def to_csv(self, path, digits=12):
        t = self.times if self.times is not None else np.arange(self.points.size, dtype=float)
        with open(path, "w") as fh:
            fh.write("t,re,im\n")
            for a, z in zip(t, self.points):
                fh.write(f"{a:.{digits}g},{z.real:.{digits}g},{z.imag:.{digits}g}\n")


class StopReason(str, enum.Enum):
    REACHED_T = "reached_T"
    FORCE_POINT_APPROACH = "force_point_approach"
    BLOWUP = "numerical_blowup"


@dataclass
class LoewnerTrack:
    """Time series produced by :func:`track_force_point`.

    ``force`` is the force-point image z_t (complex, chordal) or the angle
    v_t (radial).  ``logderiv`` is log g_t'(z0) (complex for interior
    points), log g_t'(x0) for boundary points, or log J_t = log dv_t/dv_0.
    """

    drive: DrivingFunction
    fp: ForcePointSpec
    times: np.ndarray
    driving: np.ndarray
    force: np.ndarray
    logderiv: np.ndarray
    aux: np.ndarray
    stop_reason: StopReason = StopReason.REACHED_T
    stop_interval: Optional[tuple] = None
    _wdot: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def setting(self) -> Setting:
        return self.fp.setting

    @property
    def gap(self) -> np.ndarray:
        if self.setting is Setting.RADIAL:
            return 2.0 * np.abs(np.sin((self.driving - self.force) / 2.0))
        return np.abs(self.driving - self.force)

    @property
    def theta(self) -> np.ndarray:
        return np.angle(self.force - self.driving)

    @property
    def sin_theta(self) -> np.ndarray:
        return np.sin(self.theta)

    @property
    def y(self) -> np.ndarray:
        return np.imag(self.force)

    @property
    def log_abs_deriv(self) -> np.ndarray:
        return np.real(self.logderiv)

    @property
    def conformal_radius(self) -> np.ndarray:
        return np.exp(-self.times)

    @property
    def driving_derivative(self) -> np.ndarray:
        """dW/dt at the nodes (analytic when available, else centered differences)."""
        if self._wdot is None:
            if self.drive.has_analytic_deriv:
                self._wdot = np.asarray(self.drive.deriv(self.times), dtype=float)
            else:
                self._wdot = np.gradient(self.driving, self.times, edge_order=1)
        return self._wdot

    def to_csv(self, path, digits=12):
        cols = {"t": self.times, "W": self.driving}
        if self.setting is Setting.RADIAL:
            cols["v"] = self.force
            cols["log_J"] = self.logderiv
        else:
            cols["x"] = np.real(self.force)
            cols["y"] = np.imag(self.force)
            cols["log_abs_deriv"] = np.real(self.logderiv)
            if self.fp.kind is FPKind.INTERIOR_CHORDAL:
                cols["theta"] = self.theta
                cols["sin_theta"] = self.sin_theta
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in zip(*cols.values()):
                fh.write(",".join(f"{v:.{digits}g}" for v in row) + "\n")


# -- elementary slit maps ---------------------------------------------------


def _upper_sqrt(u, ref):
    """Square root in the closed upper half-plane; on the real axis take the sign of Re(ref)."""
    s = np.sqrt(np.asarray(u, dtype=complex))
    flip = (s.imag < 0) | ((s.imag == 0) & (s.real * np.real(ref) < 0))
    return np.where(flip, -s, s)


def slit_forward(z, a, d):
    """Map H minus the vertical slit [a, a + 2i sqrt(d)] onto H (capacity 2d)."""
    z = np.asarray(z, dtype=complex)
    return a + _upper_sqrt((z - a) ** 2 + 4.0 * d, z - a)


def slit_inverse(w, a, d):
    w = np.asarray(w, dtype=complex)
    return a + _upper_sqrt((w - a) ** 2 - 4.0 * d, w - a)


def _koebe(z):
    return z / (1.0 + z) ** 2


def _koebe_inv(u):
    u = np.asarray(u, dtype=complex)
    s = np.sqrt(1.0 - 4.0 * u)
    d1 = (1.0 - 2.0 * u) + s
    d2 = (1.0 - 2.0 * u) - s
    den = np.where(np.abs(d1) >= np.abs(d2), d1, d2)
    return 2.0 * u / den


def disk_slit_forward(z, a, delta):
    """Map D minus the radial slit ending at e^{ia} onto D with g(0)=0, g'(0)=e^delta."""
    rot = cmath.exp(1j * a)
    z = np.asarray(z, dtype=complex)
    return rot * _koebe_inv(math.exp(delta) * _koebe(z / rot))


def disk_slit_inverse(w, a, delta):
    rot = cmath.exp(1j * a)
    w = np.asarray(w, dtype=complex)
    return rot * _koebe_inv(math.exp(-delta) * _koebe(w / rot))


def disk_slit_tip(a, delta):
    r = float(_koebe_inv(math.exp(-delta) / 4.0).real)
    return r * cmath.exp(1j * a)


# -- point flow -------------------------------------------------------------


def _vector_field(setting):
    if setting is Setting.RADIAL:

        def f(g, w):
            W = np.exp(1j * w)
            return g * (W + g) / (W - g)

        def gap(g, w):
            return np.abs(g - np.exp(1j * w))

    else:

        def f(g, w):
            return 2.0 / (g - w)

        def gap(g, w):
            return np.abs(g - w)

    return f, gap


def flow_points(
    drive: DrivingFunction,
    points: Sequence[complex],
    T: float,
    eps_stop: Optional[float] = None,
    rtol: float = 1e-9,
):
    """Flow points under the Loewner equation with adaptive RK4 (step doubling).

    Returns ``(values, stop_times)``.  A point stops once it comes within
    ``eps_stop`` (default 1e-6 of its initial gap) of the driving point;
    its stop time estimates when it is swallowed.  If the step underflows
    while the offending points are already within 1e-3 of their initial gap,
    they are stopped there instead of raising StepSizeUnderflow.
    """
    if T > drive.horizon:
        raise HorizonError(f"T={T} beyond horizon {drive.horizon}")
    f, gapf = _vector_field(drive.setting)
    z = np.array(points, dtype=complex, ndmin=1).copy()
    w0 = drive.eval(0.0)
    g0 = gapf(z, w0)
    eps = 1e-6 * g0 if eps_stop is None else np.full(z.shape, float(eps_stop))
    stop = np.full(z.shape, float(T))
    active = g0 >= eps
    stop[~active] = 0.0
    t = 0.0
    h = T / 64.0
    hmin = 1e-14 * T

    def rk4(zz, t0, hh):
        wa, wm, wb = drive.eval(np.array([t0, t0 + hh / 2, t0 + hh]))
        k1 = f(zz, wa)
        k2 = f(zz + hh / 2 * k1, wm)
        k3 = f(zz + hh / 2 * k2, wm)
        k4 = f(zz + hh * k3, wb)
        return zz + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    while t < T and np.any(active):
        h = min(h, T - t)
        za = z[active]
        with np.errstate(all="ignore"):
            full = rk4(za, t, h)
            half = rk4(rk4(za, t, h / 2), t + h / 2, h / 2)
            scale = np.maximum(gapf(half, drive.eval(t + h)), 1e-300)
            errs = np.abs(full - half) / scale
            err = np.max(errs) if za.size else 0.0
        if not np.isfinite(err) or err > rtol:
            h /= 2.0
            if h < hmin:
                # points already deep inside the approach are being swallowed: stop them here
                bad = ~(np.isfinite(errs) & (errs <= rtol))
                idx = np.flatnonzero(active)[bad]
                if np.all(gapf(z[idx], drive.eval(t)) < 1e-3 * g0[idx]):
                    stop[idx] = t
                    active[idx] = False
                    h = hmin * 2.0 ** 10
                    continue
                raise StepSizeUnderflow(f"adaptive step fell below {hmin:.3g} at t={t:.6g}")
            continue
        t += h
        z[active] = half + (half - full) / 15.0
        g = gapf(z, drive.eval(t))
        newly = active & (g < eps)
        stop[newly] = t
        active &= ~newly
        if err < rtol / 32.0:
            h *= 2.0
    return z, stop


# -- force point tracking ----------------------------------------------------


def _rhs_factory(fp: ForcePointSpec, n_aux: int):
    if fp.setting is Setting.RADIAL:

        def rhs(y, w):
            d = (y[0] - w) / 2.0
            s = math.sin(d)
            out = [math.cos(d) / s, -0.5 / (s * s)]
            for a in y[2:]:
                out.append(1.0 / math.tan((a - w) / 2.0))
            return out

        def gap(y, w):
            return 2.0 * abs(math.sin((y[0] - w) / 2.0))

    else:

        def rhs(y, w):
            d = y[0] - w
            out = [2.0 / d, -2.0 / (d * d)]
            for a in y[2:]:
                out.append(2.0 / (a - w))
            return out

        def gap(y, w):
            return abs(y[0] - w)

    return rhs, gap


def _rk4_step(rhs, y, h, wa, wm, wb):
    k1 = rhs(y, wa)
    y2 = [a + 0.5 * h * b for a, b in zip(y, k1)]
    k2 = rhs(y2, wm)
    y3 = [a + 0.5 * h * b for a, b in zip(y, k2)]
    k3 = rhs(y3, wm)
    y4 = [a + h * b for a, b in zip(y, k3)]
    k4 = rhs(y4, wb)
    return [a + h / 6.0 * (p + 2 * q + 2 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4)]


def _tightness(dt: Optional[float], T: float) -> float:
    # refinement thresholds shrink with the requested relative step so that
    # halving dt halves every step of the refined grid as well; measuring dt
    # against T keeps the grid covariant under Loewner scaling
    return 1.0 if dt is None else min(1.0, dt / (1e-3 * T))


def _base_grid(drive: DrivingFunction, T: float, dt: Optional[float], max_rounds: int = 12):
    tight = math.sqrt(_tightness(dt, T))
    if drive.is_sampled and dt is None:
        ts = drive.samples[0]
        ts = ts[(ts >= 0.0) & (ts < T)]
        ts = np.unique(np.concatenate([[0.0], ts, [T]]))
    else:
        if dt is None:
            dt = min(1e-3, T / 1000.0)
        n = max(2, int(math.ceil(T / dt - 1e-9)))
        ts = np.linspace(0.0, T, n + 1)
    # refine where the driving moves more than 0.2 sqrt(step) in one step
    for _ in range(max_rounds):
        W = drive.eval(ts)
        bad = np.abs(np.diff(W)) > 0.2 * tight * np.sqrt(np.diff(ts))
        if not np.any(bad):
            break
        mids = 0.5 * (ts[:-1] + ts[1:])[bad]
        ts = np.sort(np.concatenate([ts, mids]))
    return ts


def track_force_point(
    drive: DrivingFunction,
    fp: ForcePointSpec,
    T: float,
    dt: Optional[float] = None,
    eps_stop: Optional[float] = None,
    aux_points: Sequence[complex] = (),
    strict: bool = True,
    max_halvings: int = 30,
) -> LoewnerTrack:
    """Co-integrate the force point and its derivative accumulator with RK4.

    The grid starts uniform with step ``dt`` (or the sample times of a
    sampled driving) and is halved wherever the driving moves by more than
    0.2*sqrt(step) or the force-point gap changes by more than 10% in a
    step.  For dt below 1e-3*T both thresholds tighten in proportion, so the
    whole grid scales with dt.  ``aux_points`` are extra chordal
    boundary/interior points (or radial angles) flowed alongside.
    """
    if fp.setting is not drive.setting:
        raise ConfigError(f"force point setting {fp.setting.value} does not match driving {drive.setting.value}")
    if T <= 0:
        raise ConfigError("T must be positive")
    if T > drive.horizon * (1 + 1e-12):
        raise HorizonError(f"T={T} beyond horizon {drive.horizon}")
    ts = _base_grid(drive, T, dt)
    mids = 0.5 * (ts[:-1] + ts[1:])
    Wn = drive.eval(ts)
    Wm = drive.eval(mids)

    radial = fp.setting is Setting.RADIAL
    if radial:
        y = [float(fp.value), 0.0] + [float(a) for a in aux_points]
    else:
        y = [complex(fp.value), 0j] + [complex(a) for a in aux_points]
    rhs, gapf = _rhs_factory(fp, len(aux_points))
    g0 = gapf(y, float(Wn[0]))
    eps = 1e-6 * g0 if eps_stop is None else float(eps_stop)

    out_t = [float(ts[0])]
    out_w = [float(Wn[0])]
    out_y = [list(y)]
    stop_reason = StopReason.REACHED_T
    stop_interval = None
    hmin = 1e-14 * T
    tol_gap = 0.1 * _tightness(dt, T)

    def advance(t0, t1, wa, wm, wb, y, depth):
        h = t1 - t0
        y1 = _rk4_step(rhs, y, h, wa, wm, wb)
        ok = all(map(_finite, y1)) and (radial or y1[0].imag >= 0.0 or fp.kind is FPKind.BOUNDARY_CHORDAL)
        if ok:
            g_old = gapf(y, wa)
            g_new = gapf(y1, wb)
            ok = abs(g_new - g_old) <= tol_gap * g_old
        if ok or depth >= max_halvings:
            if not all(map(_finite, y1)):
                raise NumericalBlowup(f"non-finite state at t={t1:.6g}")
            return [(t1, wb, y1)]
        if h / 2 < hmin:
            raise StepSizeUnderflow(f"step fell below {hmin:.3g} near t={t0:.6g}")
        tm = 0.5 * (t0 + t1)
        q1, q3 = drive.eval(np.array([0.5 * (t0 + tm), 0.5 * (tm + t1)]))
        first = advance(t0, tm, wa, q1, wm, y, depth + 1)
        tm_, wm_, ym = first[-1]
        g_mid = gapf(ym, wm_)
        if g_mid < eps:
            return first
        return first + advance(tm, t1, wm, q3, wb, ym, depth + 1)

    for i in range(ts.size - 1):
        pieces = advance(float(ts[i]), float(ts[i + 1]), float(Wn[i]), float(Wm[i]), float(Wn[i + 1]), y, 0)
        done = False
        for (t1, w1, y1) in pieces:
            if gapf(y1, w1) < eps:
                stop_reason = StopReason.FORCE_POINT_APPROACH
                stop_interval = (out_t[-1], t1)
                done = True
                break
            out_t.append(t1)
            out_w.append(w1)
            out_y.append(y1)
        if done:
            break
        y = out_y[-1]

    if stop_reason is StopReason.FORCE_POINT_APPROACH and strict:
        raise ForcePointApproach(
            f"force point gap fell below {eps:.3g} in [{stop_interval[0]:.9g}, {stop_interval[1]:.9g}]",
            *stop_interval,
        )
    arr = np.array(out_y)
    dtype = float if radial else complex
    force = arr[:, 0].astype(dtype)
    logd = arr[:, 1]
    if radial or fp.kind is FPKind.BOUNDARY_CHORDAL:
        logd = np.real(logd).astype(float)
        if not radial:
            force = np.real(force).astype(float)
    else:
        logd = logd.astype(complex)
    aux = arr[:, 2:].astype(dtype)
    return LoewnerTrack(
        drive=drive, fp=fp, times=np.array(out_t), driving=np.array(out_w), force=force,
        logderiv=logd, aux=aux, stop_reason=stop_reason, stop_interval=stop_interval,
    )


def _finite(v):
    return cmath.isfinite(v) if isinstance(v, complex) else math.isfinite(v)


# -- traces -----------------------------------------------------------------


def trace(drive: DrivingFunction, n_steps: int = 1000, T: Optional[float] = None, times=None) -> Curve:
    """Trace by composing inverse vertical-slit (or disk-slit) maps.

    Step k uses the slit with capacity increment t_k - t_{k-1} rooted at the
    driving value W(t_k); the trace point gamma(t_k) is the tip of that slit
    pulled back through the earlier inverse maps.
    """
    if times is None:
        if T is None:
            raise ConfigError("need T or times")
        if n_steps < 2:
            raise ConfigError("n_steps must be at least 2")
        if T > drive.horizon * (1 + 1e-12):
            raise HorizonError(f"T={T} beyond horizon {drive.horizon}")
        times = np.linspace(0.0, T, n_steps + 1)
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    if np.any(dts <= 0):
        raise ConfigError("times must be increasing")
    a = np.asarray(drive.eval(times[1:]), dtype=float)
    w0 = float(drive.eval(times[0]))
    n = a.size
    radial = drive.setting is Setting.RADIAL
    if radial:
        r = np.real(_koebe_inv(np.exp(-dts) / 4.0))
        Z = r * np.exp(1j * a)
        for j in range(n - 2, -1, -1):
            Z[j + 1:] = disk_slit_inverse(Z[j + 1:], a[j], dts[j])
        start = cmath.exp(1j * w0)
        par, dom = Parametrization.CONFORMAL_RADIUS, Domain.D
    else:
        Z = a + 2j * np.sqrt(dts)
        for j in range(n - 2, -1, -1):
            Z[j + 1:] = slit_inverse(Z[j + 1:], a[j], dts[j])
        start = complex(w0)
        par, dom = Parametrization.CAPACITY, Domain.H
    if not np.all(np.isfinite(Z)):
        raise NumericalBlowup("trace produced non-finite points")
    pts = np.concatenate([[start], Z])
    return Curve(pts, par, dom, times.copy())


def wholeplane_intersection_parameter(rho: float, y0: float = 1.0) -> float:
    """x0 at which the power-map trace closes its loop, for rho in (-4, -2)."""
    p = -4.0 / (2.0 + rho)
    return -y0 * math.tan(math.pi / p)


def trace_wholeplane(
    rho: float,
    y0: float = 1.0,
    convention: str = "standard",
    n: int = 4000,
    theta: float = 0.0,
    orientation: str = "+",
    v0: Optional[float] = None,
    cutoff: float = 1e-4,
) -> Curve:
    """Closed-form whole-plane SLE_0(rho) trace.

    Standard convention runs from infinity with reference point 0: the image
    of {x + i y0 : x > x0} under z -> z^{-4/(2+rho)} traversed from x = +inf.
    The inverted convention (start 0, reference infinity) applies z -> 1/z.
    For rho = -2 the trace is the logarithmic spiral with constant
    C = 3pi/2 - v0/2.  ``cutoff`` bounds the truncation near infinity in the
    inverted picture.
    """
    rho = float(rho)
    if rho > -2.0:
        raise ConfigError("whole-plane SLE_0(rho) is defined for rho <= -2")
    if convention not in ("standard", "inverted"):
        raise ConfigError("convention must be 'standard' or 'inverted'")
    if rho == -2.0:
        if v0 is None:
            raise ConfigError("rho = -2 needs v0")
        C = 1.5 * math.pi - float(v0) / 2.0
        L = -math.log(cutoff)
        u = np.linspace(L, -L, n)
        pts = np.exp(u + 1j * (u * math.tan(C)))
    else:
        p = -4.0 / (2.0 + rho)
        # inverted radius is (sin(phi)/y0)^p; keep it above cutoff at the ends
        d0 = math.asin(min(1.0, y0 * cutoff ** (1.0 / p)))
        if rho <= -4.0:
            phi_end = math.pi - d0
        else:
            phi_end = math.pi / 2.0 + math.pi / p
        phi = np.linspace(d0, phi_end, n)
        pts = (y0 / np.sin(phi)) ** p * np.exp(1j * p * phi)
    if orientation == "-":
        pts = np.conj(pts)
    elif orientation != "+":
        raise ConfigError("orientation must be '+' or '-'")
    pts = pts * cmath.exp(1j * theta)
    if convention == "inverted":
        pts = 1.0 / pts
    return Curve(pts, Parametrization.UNKNOWN, Domain.PLANE)
