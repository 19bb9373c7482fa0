"""Driving functions for chordal and radial Loewner chains.

Closed-form SLE_0(rho) families carry analytic derivatives.  Sampled
driving functions interpolate linearly and differentiate by centered
finite differences (one-sided at the ends).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ConfigError, HorizonError

__all__ = [
    "Setting",
    "FPKind",
    "ForcePointSpec",
    "DrivingFunction",
    "make_chordal_sle0",
    "make_radial_sle0",
    "make_chordal_sle0_spiral",
    "make_wholeplane_sle0",
    "make_ray",
    "make_zero",
    "make_trigonometric",
    "random_band_limited",
    "from_callable",
    "from_samples",
    "radial_gap",
]


class Setting(str, enum.Enum):
    CHORDAL = "chordal"
    RADIAL = "radial"


class FPKind(str, enum.Enum):
    BOUNDARY_CHORDAL = "boundary"
    INTERIOR_CHORDAL = "interior"
    BOUNDARY_RADIAL = "radial"


@dataclass(frozen=True)
class ForcePointSpec:
    """Force point location together with the weight rho."""

    kind: FPKind
    value: complex
    rho: float

    def __post_init__(self):
        v = self.value
        if self.kind is FPKind.BOUNDARY_CHORDAL:
            if complex(v).imag != 0 or complex(v).real == 0:
                raise ConfigError("boundary force point must be a nonzero real")
            object.__setattr__(self, "value", float(complex(v).real))
        elif self.kind is FPKind.INTERIOR_CHORDAL:
            if complex(v).imag <= 0:
                raise ConfigError("interior force point needs Im z0 > 0")
            object.__setattr__(self, "value", complex(v))
        else:
            v = float(complex(v).real)
            if not 0.0 < v < 2.0 * math.pi:
                raise ConfigError("radial force point angle must lie in (0, 2pi)")
            object.__setattr__(self, "value", v)
        object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def boundary(cls, x0, rho):
        return cls(FPKind.BOUNDARY_CHORDAL, x0, rho)

    @classmethod
    def interior(cls, z0, rho):
        return cls(FPKind.INTERIOR_CHORDAL, z0, rho)

    @classmethod
    def radial(cls, v0, rho):
        return cls(FPKind.BOUNDARY_RADIAL, v0, rho)

    @property
    def setting(self) -> Setting:
        if self.kind is FPKind.BOUNDARY_RADIAL:
            return Setting.RADIAL
        return Setting.CHORDAL

    def with_rho(self, rho) -> "ForcePointSpec":
        return ForcePointSpec(self.kind, self.value, rho)


def _as_array(t):
    return np.asarray(t, dtype=float)


def _unwrap_scalar(arr, t):
    if np.ndim(t) == 0:
        return float(arr)
    return arr


@dataclass(frozen=True)
class DrivingFunction:
    """A real driving path on [t_min, horizon].

    ``func`` and ``deriv_func`` take and return float arrays.  Angles in the
    radial setting are stored unwrapped.
    """

    setting: Setting
    func: Callable[[np.ndarray], np.ndarray]
    deriv_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    horizon: float = math.inf
    t_min: float = 0.0
    family: str = "custom"
    params: Mapping = field(default_factory=dict)
    samples: Optional[tuple] = None

    def _check(self, t):
        t = _as_array(t)
        if t.size:
            tol = 1e-12 * max(1.0, abs(self.horizon) if math.isfinite(self.horizon) else 1.0)
            if np.any(t > self.horizon + tol):
                raise HorizonError(
                    f"{self.family}: t={float(np.max(t)):.6g} beyond horizon {self.horizon:.6g}"
                )
            if np.any(t < self.t_min - 1e-12 * max(1.0, abs(self.t_min))):
                raise HorizonError(f"{self.family}: t={float(np.min(t)):.6g} before start {self.t_min:.6g}")
        return t

    def eval(self, t):
        ta = self._check(t)
        return _unwrap_scalar(self.func(ta), t)

    __call__ = eval

    def deriv(self, t):
        ta = self._check(t)
        if self.deriv_func is not None:
            return _unwrap_scalar(self.deriv_func(ta), t)
        h = 1e-6 * max(1.0, float(np.max(np.abs(ta))) if ta.size else 1.0)
        lo = np.maximum(ta - h, self.t_min)
        hi = np.minimum(ta + h, self.horizon)
        d = (self.func(hi) - self.func(lo)) / (hi - lo)
        return _unwrap_scalar(d, t)

    @property
    def is_sampled(self) -> bool:
        return self.samples is not None

    @property
    def has_analytic_deriv(self) -> bool:
        return self.deriv_func is not None and self.samples is None

    def grid(self, T: float, n: int):
        t = np.linspace(self.t_min if self.t_min > -math.inf else 0.0, T, n + 1)
        return t, self.func(t)

    def shifted(self, s: float) -> "DrivingFunction":
        """Driving of the mapped-out remainder: u -> W(s+u) - W(s)."""
        w0 = float(self.func(np.array([s]))[0])
        f, df = self.func, self.deriv_func
        if self.samples is not None:
            ts, vs = self.samples
            keep = ts >= s
            ts2 = np.concatenate([[s], ts[keep & (ts > s)]]) - s
            vs2 = np.interp(ts2 + s, ts, vs) - w0
            return from_samples(ts2, vs2, self.setting, family=self.family + "|shift")
        return DrivingFunction(
            self.setting,
            lambda u: f(u + s) - w0,
            None if df is None else (lambda u: df(u + s)),
            horizon=self.horizon - s,
            t_min=self.t_min - s,
            family=self.family + "|shift",
            params=dict(self.params, shift=s),
        )

    def rescaled(self, lam: float) -> "DrivingFunction":
        """Chordal Brownian scaling t -> lam * W(t / lam^2), which scales the trace by lam."""
        if self.setting is not Setting.CHORDAL:
            raise ConfigError("rescaling is a chordal operation")
        f, df = self.func, self.deriv_func
        l2 = lam * lam
        return DrivingFunction(
            self.setting,
            lambda t: lam * f(t / l2),
            None if df is None else (lambda t: df(t / l2) / lam),
            horizon=self.horizon * l2,
            t_min=self.t_min * l2,
            family=self.family + "|scaled",
            params=dict(self.params, scale=lam),
        )

    def to_csv(self, path, T: float, n: int = 1000, digits: int = 12):
        t, w = self.grid(T, n)
        with open(path, "w") as fh:
            fh.write("t,value\n")
            for a, b in zip(t, w):
                fh.write(f"{a:.{digits}g},{b:.{digits}g}\n")


def make_zero(setting: Setting = Setting.CHORDAL) -> DrivingFunction:
    return DrivingFunction(
        setting, lambda t: np.zeros_like(t), lambda t: np.zeros_like(t), family="zero"
    )


def make_chordal_sle0(rho: float, x0: float) -> DrivingFunction:
    """Chordal SLE_0(rho) from 0 with boundary force point x0."""
    if x0 == 0:
        raise ConfigError("x0 must be nonzero")
    rho, x0 = float(rho), float(x0)
    sgn = 1.0 if x0 > 0 else -1.0
    a = abs(x0)
    if rho == -2.0:
        func = lambda t: sgn * 2.0 * t / a
        deriv = lambda t: sgn * 2.0 / a + np.zeros_like(t)
        horizon = math.inf
    else:
        k = rho / (rho + 2.0)
        c = 2.0 * (2.0 + rho)

        def gap(t):
            return np.sqrt(np.maximum(a * a + c * t, 0.0))

        func = lambda t: sgn * (k * a - k * gap(t))
        deriv = lambda t: sgn * (-rho / gap(t))
        horizon = -a * a / c if rho < -2.0 else math.inf
    return DrivingFunction(
        Setting.CHORDAL, func, deriv, horizon=horizon,
        family="chordal_sle0", params={"rho": rho, "x0": x0},
    )


def radial_gap(rho: float, v0: float, t):
    """Closed-form gap v_t - w_t of radial SLE_0(rho)."""
    t = _as_array(t)
    u = math.cos(v0 / 2.0) * np.exp(-(rho + 2.0) * t / 4.0)
    return 2.0 * np.arccos(np.clip(u, -1.0, 1.0))


def make_radial_sle0(rho: float, v0: float) -> DrivingFunction:
    """Radial SLE_0(rho) in the disk from 1 with force point e^{i v0}."""
    rho, v0 = float(rho), float(v0)
    if not 0.0 < v0 < 2.0 * math.pi:
        raise ConfigError("v0 must lie in (0, 2pi)")
    c0 = math.cos(v0 / 2.0)
    if rho == -2.0:
        cot = c0 / math.sin(v0 / 2.0)
        func = lambda t: t * cot
        deriv = lambda t: cot + np.zeros_like(t)
        horizon = math.inf
    else:
        k = rho / (rho + 2.0)
        b = (rho + 2.0) / 4.0

        def u(t):
            return np.clip(c0 * np.exp(-b * t), -1.0, 1.0)

        func = lambda t: -k * (2.0 * np.arccos(u(t)) - v0)
        deriv = lambda t: -(rho / 2.0) * u(t) / np.sqrt(1.0 - u(t) ** 2)
        if rho < -2.0 and c0 != 0.0:
            horizon = math.log(1.0 / abs(c0)) / (-b)
        else:
            horizon = math.inf
    return DrivingFunction(
        Setting.RADIAL, func, deriv, horizon=horizon,
        family="radial_sle0", params={"rho": rho, "v0": v0},
    )


def make_chordal_sle0_spiral(z0: complex) -> DrivingFunction:
    """Chordal SLE_0(-4) with interior force point z0: a log spiral into z0."""
    z0 = complex(z0)
    if z0.imag <= 0:
        raise ConfigError("z0 must lie in the upper half-plane")
    r = abs(z0)
    ct = z0.real / r
    horizon = r * r / 4.0

    def root(t):
        return np.sqrt(np.maximum(r * r - 4.0 * t, 0.0))

    return DrivingFunction(
        Setting.CHORDAL,
        lambda t: 2.0 * ct * (r - root(t)),
        lambda t: 4.0 * ct / root(t),
        horizon=horizon,
        family="chordal_sle0_spiral",
        params={"z0": [z0.real, z0.imag]},
    )


def make_wholeplane_sle0(rho, theta=0.0, T=0.0, orientation="+", v0_for_minus2=None, window=20.0):
    """Whole-plane SLE_0(rho) driving on the window [T - window, T]."""
    rho, theta, T = float(rho), float(theta), float(T)
    if rho > -2.0:
        raise ConfigError("whole-plane SLE_0(rho) requires rho <= -2")
    sign = {"+": 1.0, "-": -1.0}.get(str(orientation))
    if sign is None:
        raise ConfigError("orientation must be '+' or '-'")
    if rho == -2.0:
        if v0_for_minus2 is None:
            raise ConfigError("rho = -2 needs v0_for_minus2")
        cot = 1.0 / math.tan(float(v0_for_minus2) / 2.0)
        return DrivingFunction(
            Setting.RADIAL, lambda t: t * cot + theta, lambda t: cot + np.zeros_like(t),
            horizon=math.inf, t_min=T - window, family="wholeplane_sle0",
            params={"rho": rho, "theta": theta, "v0": float(v0_for_minus2)},
        )
    k = 2.0 * rho / (rho + 2.0)
    b = (rho + 2.0) / 4.0

    def u(t):
        return np.minimum(np.exp(b * (T - t)), 1.0)

    return DrivingFunction(
        Setting.RADIAL,
        lambda t: sign * k * np.arcsin(u(t)) + theta,
        lambda t: -sign * (rho / 2.0) * u(t) / np.sqrt(1.0 - u(t) ** 2),
        horizon=T, t_min=T - window, family="wholeplane_sle0",
        params={"rho": rho, "theta": theta, "T": T, "orientation": str(orientation)},
    )


def make_ray(rho: float) -> DrivingFunction:
    """Driving c*sqrt(t) whose trace is the ray at angle pi(2+rho)/(4+rho)."""
    rho = float(rho)
    if rho <= -2.0:
        raise ConfigError("make_ray needs rho > -2")
    c = -rho * math.sqrt(2.0 / (rho + 2.0))

    def deriv(t):
        with np.errstate(divide="ignore"):
            return np.where(t > 0, c / (2.0 * np.sqrt(np.maximum(t, 1e-300))), math.copysign(math.inf, c) if c else 0.0)

    return DrivingFunction(
        Setting.CHORDAL, lambda t: c * np.sqrt(np.maximum(t, 0.0)), deriv,
        family="ray", params={"rho": rho, "angle": math.pi * (2 + rho) / (4 + rho)},
    )


def make_trigonometric(amplitudes, phases, period, setting=Setting.CHORDAL, linear=0.0):
    """W_t = linear*t + sum_k a_k (sin(2 pi k t / period + phi_k) - sin phi_k), k = 1..K."""
    a = np.asarray(amplitudes, dtype=float)
    p = np.asarray(phases, dtype=float)
    k = np.arange(1, a.size + 1, dtype=float)
    om = 2.0 * math.pi * k / float(period)
    s0 = float(np.sum(a * np.sin(p)))

    def func(t):
        t = np.asarray(t, dtype=float)
        return linear * t + np.sin(np.multiply.outer(t, om) + p) @ a - s0

    def deriv(t):
        t = np.asarray(t, dtype=float)
        return linear + np.cos(np.multiply.outer(t, om) + p) @ (a * om)

    return DrivingFunction(
        setting, func, deriv, family="trigonometric",
        params={"amplitudes": a.tolist(), "phases": p.tolist(), "period": float(period), "linear": linear},
    )


def random_band_limited(rng, n_modes=4, scale=0.3, period=1.0, setting=Setting.CHORDAL):
    """Random trigonometric driving with amplitudes decaying like 1/k."""
    k = np.arange(1, n_modes + 1)
    amps = rng.normal(size=n_modes) * scale / k
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_modes)
    return make_trigonometric(amps, phases, period, setting=setting)


def from_callable(func, deriv=None, setting=Setting.CHORDAL, horizon=math.inf, family="custom"):
    """Wrap user callables; they are vectorised with numpy if they are scalar-only."""

    def vec(f):
        def g(t):
            try:
                out = np.asarray(f(t), dtype=float)
                if out.shape == np.shape(t):
                    return out
            except (TypeError, ValueError):
                pass
            return np.vectorize(lambda s: float(f(s)))(t)

        return g

    return DrivingFunction(
        setting, vec(func), None if deriv is None else vec(deriv),
        horizon=horizon, family=family,
    )


def from_samples(times, values, setting=Setting.CHORDAL, family="sampled") -> DrivingFunction:
    """Piecewise-linear driving through (times, values)."""
    ts = np.asarray(times, dtype=float).copy()
    vs = np.asarray(values, dtype=float).copy()
    if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2:
        raise ConfigError("samples must be matching 1-d arrays with at least two entries")
    if np.any(np.diff(ts) <= 0):
        raise ConfigError("sample times must be strictly increasing")
    ts.setflags(write=False)
    vs.setflags(write=False)
    dv = np.gradient(vs, ts, edge_order=1)
    return DrivingFunction(
        setting,
        lambda t: np.interp(t, ts, vs),
        lambda t: np.interp(t, ts, dv),
        horizon=float(ts[-1]), t_min=float(ts[0]), family=family,
        params={"n": int(ts.size)}, samples=(ts, vs),
    )
