"""Dirichlet energy of log|h'| for closed-form conformal maps on polar or
rectangular grids, and its renormalisation for maps with a corner at infinity."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, NonConvergent, SingularityOnGrid

__all__ = [
    "Sector",
    "Rectangle",
    "ConformalMapSample",
    "grid_dirichlet",
    "identity_map",
    "scaling_map",
    "power_map",
    "corner_map",
    "mobius_map",
    "rotate_domain",
    "corner_constant",
    "renormalized_dirichlet",
    "RenormalizedResult",
    "theorem_identity_trivial_checks",
]


@dataclass(frozen=True)
class Sector:
    """Annular sector r_in < |z| < r_out, theta_lo < arg z < theta_hi."""

    r_in: float
    r_out: float
    theta_lo: float
    theta_hi: float

    def __post_init__(self):
        if not (0.0 < self.r_in < self.r_out):
            raise ConfigError("need 0 < r_in < r_out")
        if not self.theta_lo < self.theta_hi:
            raise ConfigError("need theta_lo < theta_hi")

    def contains(self, z: complex) -> bool:
        r = abs(z)
        if not self.r_in <= r <= self.r_out:
            return False
        a = cmath.phase(z)
        span = self.theta_hi - self.theta_lo
        rel = (a - self.theta_lo) % (2.0 * math.pi)
        return rel <= span or span >= 2.0 * math.pi


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ConfigError("degenerate rectangle")

    def contains(self, z: complex) -> bool:
        return self.x0 <= z.real <= self.x1 and self.y0 <= z.imag <= self.y1


Piece = Tuple[object, Callable]


@dataclass(frozen=True)
class ConformalMapSample:
    """log|h'| given piecewise on a union of sectors/rectangles.

    Each piece is (domain, sigma) where sigma maps a complex array to
    log|h'|.  ``grad`` optionally gives the gradient of sigma as a complex
    number d/dx + i d/dy, one per piece.  ``branch_points`` are points where
    sigma is singular; a grid cell containing one is an error.
    """

    pieces: Tuple[Piece, ...]
    grad: Optional[Tuple[Callable, ...]] = None
    branch_points: Tuple[complex, ...] = ()
    name: str = "map"

    def log_abs_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, np.nan)
        for dom, sig in self.pieces:
            m = np.vectorize(dom.contains, otypes=[bool])(z) if z.ndim else np.array(dom.contains(complex(z)))
            out = np.where(m & np.isnan(out), sig(z), out)
        return out

    def with_outer_radius(self, R: float) -> "ConformalMapSample":
        pieces = []
        for dom, sig in self.pieces:
            if not isinstance(dom, Sector):
                raise ConfigError("only sector domains can be rescaled")
            pieces.append((Sector(dom.r_in, R, dom.theta_lo, dom.theta_hi), sig))
        return ConformalMapSample(tuple(pieces), self.grad, self.branch_points, self.name)


def _check_branch(mp: ConformalMapSample):
    for b in mp.branch_points:
        for dom, _ in mp.pieces:
            if dom.contains(complex(b)):
                raise SingularityOnGrid(f"branch point {b} lies in the gridded domain")


def _sector_integral(dom: Sector, sig, grad, n_r, n_theta, spacing):
    th = dom.theta_lo + (np.arange(n_theta) + 0.5) * (dom.theta_hi - dom.theta_lo) / n_theta
    dth = (dom.theta_hi - dom.theta_lo) / n_theta
    if spacing == "log":
        s = np.log(dom.r_in) + (np.arange(n_r) + 0.5) * (math.log(dom.r_out / dom.r_in)) / n_r
        ds = math.log(dom.r_out / dom.r_in) / n_r
        r = np.exp(s)
        weight = r * r * ds * dth  # r dr dtheta = r^2 ds dtheta
        dr_step = r * (math.exp(0.5 * ds) - math.exp(-0.5 * ds)) / 2.0
    else:
        dr = (dom.r_out - dom.r_in) / n_r
        r = dom.r_in + (np.arange(n_r) + 0.5) * dr
        weight = r * dr * dth
        dr_step = np.full(n_r, 0.5 * dr)
    R, TH = np.meshgrid(r, th, indexing="ij")
    W = np.broadcast_to(weight[:, None], R.shape)
    z = R * np.exp(1j * TH)
    if grad is not None:
        g2 = np.abs(grad(z)) ** 2
    else:
        hr = dr_step[:, None]
        ht = 0.5 * dth
        s_r = (sig((R + hr) * np.exp(1j * TH)) - sig((R - hr) * np.exp(1j * TH))) / (2.0 * hr)
        s_t = (sig(R * np.exp(1j * (TH + ht))) - sig(R * np.exp(1j * (TH - ht)))) / (2.0 * ht)
        g2 = s_r ** 2 + (s_t / R) ** 2
    if not np.all(np.isfinite(g2)):
        raise SingularityOnGrid("log|h'| is not finite on the grid")
    return float(np.sum(g2 * W))


def _rect_integral(dom: Rectangle, sig, grad, n_x, n_y):
    hx = (dom.x1 - dom.x0) / n_x
    hy = (dom.y1 - dom.y0) / n_y
    x = dom.x0 + (np.arange(n_x) + 0.5) * hx
    y = dom.y0 + (np.arange(n_y) + 0.5) * hy
    X, Y = np.meshgrid(x, y, indexing="ij")
    z = X + 1j * Y
    if grad is not None:
        g2 = np.abs(grad(z)) ** 2
    else:
        sx = (sig(z + 0.5 * hx) - sig(z - 0.5 * hx)) / hx
        sy = (sig(z + 0.5j * hy) - sig(z - 0.5j * hy)) / hy
        g2 = sx ** 2 + sy ** 2
    if not np.all(np.isfinite(g2)):
        raise SingularityOnGrid("log|h'| is not finite on the grid")
    return float(np.sum(g2) * hx * hy)


def grid_dirichlet(
    mp: ConformalMapSample,
    resolution: int = 200,
    n_theta: Optional[int] = None,
    spacing: str = "log",
    analytic_gradient: bool = False,
) -> float:
    """(1/pi) * midpoint-rule integral of |grad log|h'||^2 over the map's domain.

    Sectors use a polar grid with ``resolution`` radial cells (uniform in r
    or in log r) and ``n_theta`` angular cells (default: ``resolution``).
    Rectangles use a ``resolution`` x ``resolution`` Cartesian grid.  The
    gradient is a centred difference across each cell unless
    ``analytic_gradient`` is set and the map supplies one.
    """
    if spacing not in ("log", "uniform"):
        raise ConfigError("spacing must be 'log' or 'uniform'")
    if resolution < 1:
        raise ConfigError("resolution must be positive")
    _check_branch(mp)
    nt = resolution if n_theta is None else int(n_theta)
    total = 0.0
    for k, (dom, sig) in enumerate(mp.pieces):
        grad = mp.grad[k] if (analytic_gradient and mp.grad is not None) else None
        if isinstance(dom, Sector):
            total += _sector_integral(dom, sig, grad, resolution, nt, spacing)
        elif isinstance(dom, Rectangle):
            total += _rect_integral(dom, sig, grad, resolution, nt)
        else:
            raise ConfigError(f"unsupported domain {dom!r}")
    return total / math.pi


# -- map families ---------------------------------------------------------------


def _const(c):
    return lambda z: np.full(np.shape(z), c, dtype=float)


def identity_map(domain) -> ConformalMapSample:
    return ConformalMapSample(((domain, _const(0.0)),), (lambda z: np.zeros(np.shape(z), complex),), (), "identity")


def scaling_map(lam: complex, domain) -> ConformalMapSample:
    if lam == 0:
        raise ConfigError("scaling factor must be nonzero")
    c = math.log(abs(lam))
    return ConformalMapSample(((domain, _const(c)),), (lambda z: np.zeros(np.shape(z), complex),), (), "scaling")


def _power_piece(p: float):
    sig = lambda z: (p - 1.0) * np.log(np.abs(z))
    # grad of (p-1) log|z| is (p-1) z / |z|^2 = (p-1) / conj(z)
    grad = lambda z: (p - 1.0) / np.conj(z)
    return sig, grad


def power_map(p: float, theta: float, r: float, R: float, theta0: float = 0.0) -> ConformalMapSample:
    """h(z) = z^p on the annular sector of opening ``theta``."""
    sig, grad = _power_piece(p)
    return ConformalMapSample(((Sector(r, R, theta0, theta0 + theta), sig),), (grad,), (0j,), f"power({p:g})")


def corner_map(beta: float, r: float = 1.0, R: float = 10.0) -> ConformalMapSample:
    """Two-sector map: z^{1/(2 beta)} on 0 < arg z < 2 beta pi and
    the matching power z^{1/(2 - 2 beta)} on the remaining angle."""
    if not 0.0 < beta < 1.0:
        raise ConfigError("beta must lie in (0, 1)")
    p1 = 1.0 / (2.0 * beta)
    p2 = 1.0 / (2.0 - 2.0 * beta)
    a = 2.0 * math.pi * beta
    s1, g1 = _power_piece(p1)
    s2, g2 = _power_piece(p2)
    return ConformalMapSample(
        ((Sector(r, R, 0.0, a), s1), (Sector(r, R, a, 2.0 * math.pi), s2)),
        (g1, g2),
        (0j,),
        f"corner({beta:g})",
    )


def mobius_map(a: complex, b: complex, c: complex, d: complex, domain) -> ConformalMapSample:
    det = a * d - b * c
    if det == 0:
        raise ConfigError("degenerate Mobius map")
    sig = lambda z: math.log(abs(det)) - 2.0 * np.log(np.abs(c * z + d))
    grad = lambda z: -2.0 / np.conj(z + d / c) if c != 0 else np.zeros(np.shape(z), complex)
    poles = (complex(-d / c),) if c != 0 else ()
    return ConformalMapSample(((domain, sig),), (grad,), poles, "mobius")


def rotate_domain(mp: ConformalMapSample, phi: float) -> ConformalMapSample:
    """Precompose with the rotation z -> e^{i phi} z (sector domains only)."""
    rot = cmath.exp(1j * phi)
    pieces = []
    grads = []
    for k, (dom, sig) in enumerate(mp.pieces):
        if not isinstance(dom, Sector):
            raise ConfigError("rotation is supported on sector domains")
        pieces.append((Sector(dom.r_in, dom.r_out, dom.theta_lo - phi, dom.theta_hi - phi),
                       (lambda s: lambda z: s(rot * z))(sig)))
        if mp.grad is not None:
            grads.append((lambda g: lambda z: np.conj(rot) * g(rot * z))(mp.grad[k]))
    return ConformalMapSample(tuple(pieces), tuple(grads) if grads else None,
                              tuple(b / rot for b in mp.branch_points), mp.name + "-rot")


# -- renormalisation --------------------------------------------------------------


def corner_constant(beta: float) -> float:
    if not 0.0 < beta < 1.0:
        raise ConfigError("beta must lie in (0, 1)")
    return (1.0 - 2.0 * beta) ** 2 / (2.0 * beta * (1.0 - beta))


@dataclass(frozen=True)
class RenormalizedResult:
    value: float
    slope: float
    c_beta: float
    radii: Tuple[float, ...]
    raw: Tuple[float, ...]
    bracket: Tuple[float, ...]

    def to_dict(self):
        return {"value": self.value, "slope": self.slope, "c_beta": self.c_beta,
                "radii": list(self.radii), "raw": list(self.raw), "bracket": list(self.bracket)}


def _aitken(x0, x1, x2):
    den = x2 - 2.0 * x1 + x0
    if abs(den) < 1e-14 * (1.0 + abs(x2)):
        return x2
    return x2 - (x2 - x1) ** 2 / den


def renormalized_dirichlet(
    mp: ConformalMapSample,
    beta: float,
    R_sequence: Sequence[float],
    resolution: int = 200,
    tol: float = 1e-3,
    **grid_kw,
) -> RenormalizedResult:
    """Renormalised energy D(R) - c_beta log R over a growing outer radius.

    The limit is Aitken-extrapolated from the last three radii; with four or
    more radii the extrapolation is repeated one step earlier and the two
    must agree within ``tol`` (relative), else NonConvergent.  The slope of
    D(R) against log R is returned for comparison with c_beta.
    """
    R = [float(x) for x in R_sequence]
    if len(R) < 2 or any(b <= a for a, b in zip(R, R[1:])):
        raise ConfigError("R_sequence must be increasing with at least two entries")
    c = corner_constant(beta)
    raw = [grid_dirichlet(mp.with_outer_radius(x), resolution=resolution, **grid_kw) for x in R]
    br = [v - c * math.log(x) for v, x in zip(raw, R)]
    slope = float(np.polyfit(np.log(R), raw, 1)[0])
    if len(br) >= 3:
        val = _aitken(*br[-3:])
        if len(br) >= 4:
            prev = _aitken(*br[-4:-1])
            if abs(val - prev) > tol * (1.0 + abs(val)):
                raise NonConvergent(f"extrapolated values {prev:.6g} and {val:.6g} disagree")
    else:
        val = br[-1]
    return RenormalizedResult(float(val), slope, c, tuple(R), tuple(raw), tuple(br))


# -- identity-case sanity checks ---------------------------------------------------


def theorem_identity_trivial_checks(rho: float, T: float = 1.0) -> dict:
    """Checks that hold for the energy minimiser itself.

    With gamma equal to the minimiser the normalised maps agree, H is the
    identity and both sides of the Dirichlet formulas vanish.  The point
    coefficients are matched against the integrated-formula coefficients
    under the weight change rho -> -6 - rho.
    """
    from .driving import ForcePointSpec, make_chordal_sle0
    from .energy import rho_energy_direct

    rho = float(rho)
    rp = -6.0 - rho
    radial_coeff = (rho + 6.0) * (rho - 2.0) / 8.0
    interior_coeff = rp * (8.0 + rp) / 8.0
    chordal_coeff = rho * (rho + 4.0) / 4.0
    boundary_coeff = rho * (4.0 + rho) / 4.0
    alpha = (rho + 2.0) / (rho + 4.0) if rho != -4.0 else math.nan
    out = {
        "rho": rho,
        "radial_point_coefficient": radial_coeff,
        "interior_formula_coefficient_dual": interior_coeff,
        "radial_coefficients_match": abs(radial_coeff - interior_coeff) <= 1e-12 * (1 + abs(radial_coeff)),
        "chordal_point_coefficient": chordal_coeff,
        "boundary_formula_coefficient": boundary_coeff,
        "chordal_coefficients_match": abs(chordal_coeff - boundary_coeff) <= 1e-12 * (1 + abs(chordal_coeff)),
        "alpha": alpha,
        "c_alpha": corner_constant(alpha) if 0.0 < alpha < 1.0 else math.nan,
    }
    if rho > -2.0:
        drive = make_chordal_sle0(rho, 1.0)
        T_use = min(T, 0.5 * drive.horizon) if math.isfinite(drive.horizon) else T
        lhs = rho_energy_direct(drive, ForcePointSpec.boundary(1.0, rho), T_use)
        # D(h) - D(h0) = 0 and log|H'| = 0 for H = identity
        rhs = 0.0 - 0.0 - chordal_coeff * 0.0
        out.update({"minimizer_energy": lhs, "dirichlet_side": rhs, "identity_case_ok": abs(lhs - rhs) < 1e-8})
    return out
