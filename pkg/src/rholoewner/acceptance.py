"""Acceptance suite: twelve end-to-end checks with fixed seeds and tolerances.

Each check returns a Criterion.  ``details`` holds only deterministic
numbers, so the summary written by ``verify`` is reproducible; wall time is
kept separately in ``elapsed``.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares

from . import driving as drv
from .dirichlet import corner_constant, corner_map, renormalized_dirichlet
from .driving import ForcePointSpec, Setting
from .energy import bound_certificates, coordinate_change_check, rho_energy_direct, rho_energy_integrated
from .energy import welding_lower_bound, welding_track
from .flowline import FlowField, integrate_flowline, polyline_hausdorff, self_intersects
from .loewner import trace, trace_wholeplane, track_force_point
from .sampler import (
    SimulationConfig,
    dual_rho,
    fit_hitting_slope,
    hitting_exponent,
    hitting_probabilities,
    tube_probability,
)
from .zipper import extract_driving

__all__ = ["Criterion", "CRITERIA", "run_criteria"]


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    details: Dict[str, object] = field(default_factory=dict)
    budget: Optional[float] = None
    elapsed: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] AC{self.number:02d} {self.name}"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "details": self.details}


def _timed(number, name, budget):
    def deco(fn):
        def run(**kw):
            t0 = time.perf_counter()
            ok, det = fn(**kw)
            el = time.perf_counter() - t0
            within = budget is None or el <= budget
            return Criterion(number, name, bool(ok and within), det, budget, el)

        run.number = number
        run.criterion_name = name
        return run

    return deco


# 1 ---------------------------------------------------------------------------------

@_timed(1, "minimizer energy vanishes", 1.0)
def minimizer_zero():
    worst = 0.0
    for rho in (-1.5, -1.0, 0.0, 1.0, 2.0, 6.0):
        c = rho_energy_direct(drv.make_chordal_sle0(rho, 1.0), ForcePointSpec.boundary(1.0, rho), 1.0)
        r = rho_energy_direct(drv.make_radial_sle0(rho, math.pi), ForcePointSpec.radial(math.pi, rho), 1.0)
        worst = max(worst, abs(c), abs(r))
    return worst < 1e-8, {"max_abs_energy": worst}


# 2 ---------------------------------------------------------------------------------

def _random_instances(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        dc = drv.random_band_limited(rng, setting=Setting.CHORDAL)
        dr = drv.random_band_limited(rng, setting=Setting.RADIAL)
        x0 = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
        z0 = complex(rng.uniform(-1.0, 1.0), rng.uniform(0.5, 1.5))
        v0 = float(rng.uniform(1.0, 2.0 * math.pi - 1.0))
        out.append((dc, ForcePointSpec.boundary(x0, float(rng.uniform(-1.5, 4.0)))))
        out.append((dc, ForcePointSpec.interior(z0, float(rng.uniform(-8.0, 2.0)))))
        out.append((dr, ForcePointSpec.radial(v0, float(rng.uniform(-1.5, 4.0)))))
    return out


@_timed(2, "direct and integrated energies agree", 60.0)
def two_route(n=20, seed=2024):
    worst_rel = 0.0
    worst_ratio = 0.0
    floor = 1e-11
    for d, fp in _random_instances(n, seed):
        errs = []
        for dt in (2e-4, 1e-4):
            rep = rho_energy_integrated(d, fp, 1.0, dt=dt)
            errs.append(rep.discrepancy)
            scale = max(abs(rep.direct), 1e-12)
        worst_rel = max(worst_rel, errs[1] / scale)
        if errs[0] > floor:
            worst_ratio = max(worst_ratio, errs[1] / errs[0])
    ok = worst_rel < 1e-3 and worst_ratio <= 0.5
    return ok, {"max_relative_discrepancy": worst_rel, "max_error_ratio_on_halving": worst_ratio}


# 3 ---------------------------------------------------------------------------------

@_timed(3, "zero driving oracle", None)
def zero_driving():
    # force point x_t = sqrt(1 + 4t), integrand rho^2 / (2 x_t^2)
    oracle = quad(lambda t: 0.5 * 4.0 / (1.0 + 4.0 * t), 0.0, 1.0, epsabs=1e-14)[0]
    rep = rho_energy_integrated(drv.make_zero(), ForcePointSpec.boundary(1.0, 2.0), 1.0)
    e1 = abs(rep.direct - oracle)
    e2 = abs(rep.integrated - oracle)
    return max(e1, e2) < 1e-4, {"oracle": oracle, "direct": rep.direct, "integrated": rep.integrated}


# 4 ---------------------------------------------------------------------------------

COORD_CASES = (
    ("H", 1.5, 1.0),
    ("H", -2.0, -1.0),
    ("H", 0.4 + 1.2j, -2.0),
    ("H", -0.5 + 1.0j, 0.0),
    ("D", 2.0, 1.0),
)


@_timed(4, "coordinate change through the zipper", 120.0)
def coordinate_change(n=800):
    worst = 0.0
    rows = []
    ok = True
    for dom, force, rho in COORD_CASES:
        st = Setting.RADIAL if dom == "D" else Setting.CHORDAL
        d = drv.make_trigonometric([0.4, 0.2], [0.3, 1.1], 2.0, setting=st)
        c = trace(d, n_steps=n, T=0.5)
        r = coordinate_change_check(c, rho, force)
        good = r.relative < 1e-2 or r.discrepancy < 1e-3
        ok &= good
        worst = max(worst, r.relative)
        rows.append([r.lhs, r.rhs])
    return ok, {"max_relative_discrepancy": worst, "sides": rows}


# 5 ---------------------------------------------------------------------------------

@_timed(5, "trace fidelity", 60.0)
def trace_fidelity():
    c = trace(drv.make_zero(), n_steps=1000, T=1.0)
    zero_err = float(np.max(np.abs(c.points - 2j * np.sqrt(c.times))))
    ang_err = 0.0
    for rho in (-1.0, 0.0, 1.0, 2.0, 6.0):
        tc = trace(drv.make_ray(rho), n_steps=800, T=1.0)
        want = math.pi * (2.0 + rho) / (4.0 + rho)
        ang_err = max(ang_err, abs(cmath.phase(tc.points[-1]) - want))
    d = drv.make_trigonometric([0.4, 0.2], [0.3, 1.1], 2.0)
    res = []
    for n in (100, 200, 400):
        res.append(extract_driving(trace(d, n_steps=n, T=0.5)).residual)
    dec = all(b < a for a, b in zip(res, res[1:]))
    ok = zero_err < 1e-3 and ang_err < 0.02 and res[-1] < 1e-2 and dec
    return ok, {"zero_driving_error": zero_err, "max_angle_error": ang_err, "zipper_residuals": res}


# 6 ---------------------------------------------------------------------------------

def _trace_vs_flowline(tr, field):
    length = float(np.sum(np.abs(np.diff(tr.points))))
    fl = integrate_flowline(field, 1e-4j, ds=2e-3, max_length=3.0 * length)
    k = int(np.argmin(np.abs(fl.points - tr.points[-1])))
    return polyline_hausdorff(tr.points, fl.points[: k + 1]) / tr.diameter


@_timed(6, "flow-line agreement", 60.0)
def flowline_agreement():
    rel = {}
    for rho in (-1.0, 0.0, 2.0):
        tr = trace(drv.make_chordal_sle0(rho, 1.0), 1000, 1.0)
        rel[f"boundary_{rho:g}"] = _trace_vs_flowline(tr, FlowField.boundary(rho, 1.0))
    z0 = cmath.exp(1j * math.pi / 3.0)
    d = drv.make_chordal_sle0_spiral(z0)
    tr = trace(d, 2000, 0.99 * d.horizon)
    rel["interior_-4"] = _trace_vs_flowline(tr, FlowField.interior(-4.0, z0))
    return max(rel.values()) < 1e-2, {"relative_hausdorff": rel}


# 7 ---------------------------------------------------------------------------------

def _circle_fit(pts):
    x, y = pts.real, pts.imag
    A = np.column_stack([x, y, np.ones_like(x)])
    sol = np.linalg.lstsq(A, x * x + y * y, rcond=None)[0]
    c = complex(sol[0] / 2.0, sol[1] / 2.0)
    R = math.sqrt(sol[2] + abs(c) ** 2)
    return c, R, float(np.max(np.abs(np.abs(pts - c) - R)))


def _cardioid_fit(pts):
    r = np.abs(pts)
    psi = np.angle(pts)

    def resid(p):
        return r - p[0] * (1.0 - np.cos(psi - p[1]))

    sol = least_squares(resid, [float(r.max()) / 2.0, float(np.angle(pts[np.argmax(r)])) + math.pi])
    return float(sol.x[0]), float(sol.x[1]), float(np.max(np.abs(resid(sol.x))))


@_timed(7, "whole-plane geometry", 30.0)
def wholeplane_geometry():
    circ = trace_wholeplane(-6.0, convention="inverted", n=4000).points
    _, R, res = _circle_fit(circ)
    card = trace_wholeplane(-4.0, convention="inverted", n=4000).points
    a, psi0, cres = _cardioid_fit(card)
    ends = [card[0], card[-1]]
    cusp = float(np.min(np.abs(card))) < 1e-3 * float(np.max(np.abs(card))) and all(
        abs(math.remainder(cmath.phase(z) - psi0, 2.0 * math.pi)) < 0.05 for z in ends
    )
    si3 = self_intersects(trace_wholeplane(-3.0, convention="inverted", n=4000).points, root=0j)
    si5 = self_intersects(trace_wholeplane(-5.0, convention="inverted", n=4000).points, root=0j)
    ok = res < 1e-3 * R and cres < 1e-3 * 2.0 * a and cusp and si3 and not si5
    return ok, {
        "circle_residual_over_radius": res / R,
        "cardioid_residual_over_size": cres / (2.0 * a),
        "cusp_at_origin": cusp,
        "rho_-3_self_intersects": si3,
        "rho_-5_self_intersects": si5,
    }


# 8 ---------------------------------------------------------------------------------

@_timed(8, "spiral and radial gap invariants", None)
def spiral_invariants():
    z0 = 0.3 + 0.8j
    d = drv.make_chordal_sle0_spiral(z0)
    tr = track_force_point(d, ForcePointSpec.interior(z0, -4.0), 0.99 * d.horizon)
    s = tr.sin_theta
    spiral = float(np.max(np.abs(s - s[0])))
    v0 = 2.0
    dr = drv.make_radial_sle0(-2.0, v0)
    trr = track_force_point(dr, ForcePointSpec.radial(v0, -2.0), 1.0)
    gap = float(np.max(np.abs((trr.force - trr.driving) - v0)))
    return spiral < 1e-4 and gap < 1e-9, {"max_sin_theta_drift": spiral, "max_radial_gap_drift": gap}


# 9 ---------------------------------------------------------------------------------

@_timed(9, "bound certificates", None)
def certificates(n=50, seed=909):
    rng = np.random.default_rng(seed)
    viol = {}
    count = {}

    def tally(certs):
        for c in certs:
            count[c.name] = count.get(c.name, 0) + 1
            if not c.ok:
                viol[c.name] = viol.get(c.name, 0) + 1

    for _ in range(n):
        dc = drv.random_band_limited(rng, setting=Setting.CHORDAL)
        dr = drv.random_band_limited(rng, setting=Setting.RADIAL)
        z0 = complex(rng.uniform(-1.0, 1.0), rng.uniform(0.5, 1.5))
        tally(bound_certificates(dc, ForcePointSpec.interior(z0, float(rng.uniform(-9.0, -4.1))), 1.0, dt=2e-4))
        x0 = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
        tally(bound_certificates(dc, ForcePointSpec.boundary(x0, float(rng.uniform(-1.9, 4.0))), 1.0, dt=2e-4))
        tally(bound_certificates(dr, ForcePointSpec.radial(math.pi, 0.0), 1.0, dt=2e-4))
    eq = 0.0
    for rho in (-1.0, 0.0, 1.0, 2.0, 5.0):
        tr = welding_track(drv.make_chordal_sle0(rho, 1.0), rho, 1.0, 1.0)
        eq = max(eq, abs(welding_lower_bound(tr, rho, 1.0)[0]))
    ok = not viol and eq < 1e-6
    return ok, {"checked": dict(sorted(count.items())), "violations": dict(sorted(viol.items())),
                "minimizer_welding_bound": eq}


# 10 --------------------------------------------------------------------------------

@_timed(10, "Monte Carlo hitting exponent and tube ordering", 600.0)
def monte_carlo(paths=100_000, seed=1234):
    eps = (0.05, 0.1, 0.2)
    slopes = {}
    ok = True
    for kappa in (0.5, 1.0):
        for rho in (0.0, 1.0):
            cfg = SimulationConfig(kappa, ForcePointSpec.radial(math.pi, rho), T=1.0, eps_stop=min(eps),
                                   seed=seed, n_paths=paths)
            est = hitting_probabilities(cfg, eps, proposal_rho=dual_rho(kappa, rho))
            s, _ = fit_hitting_slope(eps, est)
            target = hitting_exponent(kappa, rho)
            slopes[f"kappa={kappa:g},rho={rho:g}"] = {"slope": s, "exponent": target,
                                                     "p": [e.p for e in est]}
            ok &= s >= target - 0.5
    fp = ForcePointSpec.radial(math.pi, 1.0)
    center = drv.make_radial_sle0(1.0, math.pi)
    pert = drv.from_callable(lambda t: center.eval(t) + 0.5 * np.sin(2.0 * math.pi * np.asarray(t)),
                             setting=Setting.RADIAL, family="perturbed")
    cfg = SimulationConfig(0.5, fp, T=1.0, seed=seed + 1, n_paths=paths)
    a = tube_probability(cfg, center, 0.3)
    b = tube_probability(cfg, pert, 0.3)
    order = a.p > b.p and a.lo > b.hi
    return ok and order, {"slopes": slopes, "tube_minimizer": a.to_dict(), "tube_perturbed": b.to_dict()}


# 11 --------------------------------------------------------------------------------

@_timed(11, "corner renormalization constant", 60.0)
def corner_slope():
    out = {}
    ok = True
    for beta in (1.0 / 3.0, 0.4, 2.0 / 3.0):
        r = renormalized_dirichlet(corner_map(beta, 1.0, 10.0), beta, [10.0, 20.0, 40.0, 80.0], resolution=100)
        c = corner_constant(beta)
        out[f"{beta:.6f}"] = {"slope": r.slope, "c_beta": c}
        ok &= abs(r.slope - c) <= 0.01 * c
    return ok, out


CRITERIA: List[Callable[..., Criterion]] = [
    minimizer_zero,
    two_route,
    zero_driving,
    coordinate_change,
    trace_fidelity,
    flowline_agreement,
    wholeplane_geometry,
    spiral_invariants,
    certificates,
    monte_carlo,
    corner_slope,
]


def run_criteria(paths: int = 100_000, seed: int = 1234, only=None, log=None) -> List[Criterion]:
    """Run criteria 1-11 (12 is determinism of this very run, checked by the caller)."""
    out = []
    for fn in CRITERIA:
        if only is not None and fn.number not in only:
            continue
        kw = {"paths": paths, "seed": seed} if fn.number == 10 else {}
        c = fn(**kw)
        if log is not None:
            log(c)
        out.append(c)
    return out
