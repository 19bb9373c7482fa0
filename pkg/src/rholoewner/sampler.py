"""Euler-Maruyama simulation of SLE_kappa(rho) driving processes.

Each path draws from its own Philox stream keyed by (seed, path index), so a
run is reproducible and independent of how paths are scheduled.  Rare
approach events can be estimated by importance sampling under a proposal
weight; the likelihood ratio is accumulated alongside the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numba
import numpy as np
from scipy.stats import norm

from .driving import DrivingFunction, FPKind, ForcePointSpec, from_samples
from .errors import ConfigError

__all__ = [
    "SimulationConfig",
    "PathStats",
    "Estimate",
    "simulate_drive",
    "hitting_probabilities",
    "hitting_exponent",
    "fit_hitting_slope",
    "tube_probability",
    "dual_rho",
    "wilson_interval",
    "path_generator",
]

STOP_T, STOP_EPS, STOP_BLOWUP, STOP_TUBE = 0, 1, 2, 3
STOP_NAMES = {STOP_T: "horizon", STOP_EPS: "approach", STOP_BLOWUP: "blowup", STOP_TUBE: "left_tube"}
_MODES = {FPKind.BOUNDARY_CHORDAL: 0, FPKind.INTERIOR_CHORDAL: 1, FPKind.BOUNDARY_RADIAL: 2}


@dataclass(frozen=True)
class SimulationConfig:
    kappa: float
    fp: ForcePointSpec
    T: float = 1.0
    dt_max: float = 1e-3
    eps_stop: float = 1e-3
    seed: int = 0
    n_paths: int = 1000

    def __post_init__(self):
        if not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise ConfigError("kappa must be >= 0 (0 switches the noise off)")
        if int(self.n_paths) < 1:
            raise ConfigError("n_paths must be >= 1")
        if not self.dt_max > 0:
            raise ConfigError("dt_max must be positive")
        if not self.eps_stop > 0:
            raise ConfigError("eps_stop must be positive")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def rho(self) -> float:
        return self.fp.rho


def wilson_interval(k: int, n: int, level: float = 0.95):
    if n <= 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + level / 2.0))
    p = k / n
    den = 1.0 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # clamp so rounding never excludes p itself at k = 0 or k = n
    return max(0.0, min(p, mid - half)), min(1.0, max(p, mid + half))


@dataclass(frozen=True)
class Estimate:
    p: float
    lo: float
    hi: float
    n_paths: int
    n_events: int
    method: str = "plain"

    def to_dict(self):
        return {"p": self.p, "ci": [self.lo, self.hi], "n_paths": self.n_paths,
                "n_events": self.n_events, "method": self.method}


def _estimate(indicator: np.ndarray, logw: Optional[np.ndarray], level=0.95) -> Estimate:
    n = indicator.size
    k = int(indicator.sum())
    if logw is None:
        lo, hi = wilson_interval(k, n, level)
        return Estimate(k / n, lo, hi, n, k, "plain")
    y = np.where(indicator, np.exp(np.where(indicator, logw, 0.0)), 0.0)
    p = float(y.mean())
    se = float(y.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    z = float(norm.ppf(0.5 + level / 2.0))
    return Estimate(p, max(0.0, p - z * se), p + z * se, n, k, "importance")


@dataclass
class PathStats:
    final_value: np.ndarray
    hit: np.ndarray
    tau: np.ndarray
    min_gap: np.ndarray
    stop_reason: np.ndarray
    log_weight: np.ndarray
    estimate: Estimate
    extra: dict = field(default_factory=dict)

    @property
    def p_hat(self) -> float:
        return self.estimate.p

    @property
    def interval(self):
        return self.estimate.lo, self.estimate.hi

    def to_dict(self, per_path: bool = False) -> dict:
        reasons = {STOP_NAMES[k]: int(np.sum(self.stop_reason == k)) for k in STOP_NAMES}
        out = {"hit_frequency": self.estimate.to_dict(), "stop_reasons": reasons,
               "min_gap": float(np.min(self.min_gap)), **self.extra}
        if per_path:
            out["paths"] = {
                "final_value": self.final_value.tolist(),
                "hit": self.hit.tolist(),
                "tau": [None if math.isnan(x) else x for x in self.tau.tolist()],
                "min_gap": self.min_gap.tolist(),
                "stop_reason": [STOP_NAMES[int(k)] for k in self.stop_reason],
            }
        return out


def dual_rho(kappa: float, rho: float) -> float:
    """Weight whose gap process is the h-transform of the rho one (reflected Bessel dimension)."""
    return kappa - 4.0 - rho


def hitting_exponent(kappa: float, rho: float) -> float:
    return 2.0 * (rho + 2.0) / kappa - 1.0


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Philox stream for one path: key = seed + 2^64 * index."""
    return np.random.Generator(np.random.Philox(key=(int(index) << 64) | int(seed)))


# -- kernel -------------------------------------------------------------------


@numba.njit(cache=True)
def _unit_drift(mode, w, fr, fi):
    # returns (drift per unit rho, d force re, d force im, gap)
    if mode == 0:
        d = w - fr
        return 1.0 / d, -2.0 / d, 0.0, abs(d)
    if mode == 1:
        dr = w - fr
        q = dr * dr + fi * fi
        # 1/(w - z) and 2/(z - w)
        return dr / q, -2.0 * dr / q, 2.0 * fi / q, math.sqrt(q)
    h = 0.5 * (w - fr)
    c = math.cos(h) / math.sin(h)
    return 0.5 * c, -c, 0.0, 2.0 * abs(math.sin(h))


@numba.njit(cache=True)
def _run_path(gen, mode, kappa, rho, prop, fr, fi, T, dt_max, levels, tau, logw_at,
              rec, rec_t, rec_w, c_h, center, radius, stop_on_exit):
    w = 0.0
    t = 0.0
    lw = 0.0
    sk = math.sqrt(kappa)
    rmax = max(abs(rho), abs(prop), 1.0)
    nl = levels.size
    li = 0
    for j in range(nl):
        tau[j] = np.nan
        logw_at[j] = np.nan
    F, dfr, dfi, g = _unit_drift(mode, w, fr, fi)
    gmin = g
    inside = True
    nc = center.size
    if nc > 0 and abs(w - center[0]) >= radius:
        inside = False
    nrec = 0
    cap = rec_t.size
    if rec and cap > 0:
        rec_t[0] = t
        rec_w[0] = w
        nrec = 1
    reason = 0
    while li < nl and g < levels[li]:
        tau[li] = 0.0
        logw_at[li] = 0.0
        li += 1
    if li == nl and nl > 0:
        return w, gmin, 1, inside, nrec, lw
    while t < T:
        dt = min(dt_max, 0.01 * g * g / rmax)
        if kappa > 0.0:
            dt = min(dt, 0.01 * g * g / kappa)
        if t + dt > T:
            dt = T - t
        if dt <= 0.0:
            break
        sdt = math.sqrt(dt)
        xi = gen.standard_normal() if kappa > 0.0 else 0.0
        w_new = w + prop * F * dt + sk * sdt * xi
        if prop != rho:
            db = (rho - prop) * F
            lw += db * sdt * xi / sk - db * db * dt / (2.0 * kappa)
        fr = fr + dfr * dt
        fi = fi + dfi * dt
        w = w_new
        t += dt
        F, dfr, dfi, g = _unit_drift(mode, w, fr, fi)
        if not (math.isfinite(w) and math.isfinite(g) and math.isfinite(fr)):
            reason = 2
            break
        if g < gmin:
            gmin = g
        if rec and nrec < cap:
            rec_t[nrec] = t
            rec_w[nrec] = w
            nrec += 1
        if nc > 0 and inside:
            x = t / c_h
            k = min(int(x), nc - 2)
            a = x - k
            c = (1.0 - a) * center[k] + a * center[k + 1]
            if abs(w - c) >= radius:
                inside = False
                if stop_on_exit:
                    reason = 3
                    break
        while li < nl and g < levels[li]:
            tau[li] = t
            logw_at[li] = lw
            li += 1
        if nl > 0 and li == nl:
            reason = 1
            break
    if rec and nrec >= cap:
        nrec = -1
    return w, gmin, reason, inside, nrec, lw


def _initial(fp: ForcePointSpec):
    if fp.kind is FPKind.INTERIOR_CHORDAL:
        z = complex(fp.value)
        return z.real, z.imag
    return float(fp.value), 0.0


def _simulate(cfg: SimulationConfig, levels, proposal_rho, center, radius, stop_on_exit, record, rec_cap):
    mode = _MODES[cfg.fp.kind]
    rho = float(cfg.rho)
    prop = rho if proposal_rho is None else float(proposal_rho)
    if prop != rho and cfg.kappa == 0.0:
        raise ConfigError("importance sampling needs kappa > 0")
    fr, fi = _initial(cfg.fp)
    levels = np.sort(np.asarray(levels, dtype=float))[::-1].copy()
    nl = levels.size
    n = int(cfg.n_paths)
    if center is None:
        cgrid = np.empty(0)
        c_h = 1.0
    else:
        m = max(2, int(math.ceil(cfg.T / min(cfg.dt_max, 1e-3))) + 1)
        tg = np.linspace(0.0, cfg.T, m)
        cgrid = np.asarray(center.eval(tg), dtype=float)
        c_h = tg[1] - tg[0]
    final = np.empty(n)
    gmin = np.empty(n)
    reason = np.empty(n, dtype=np.int8)
    inside = np.empty(n, dtype=bool)
    tau = np.empty((n, nl))
    lw_at = np.empty((n, nl))
    lw_end = np.empty(n)
    rec_t = np.empty(rec_cap if record else 0)
    rec_w = np.empty(rec_cap if record else 0)
    drives: List[DrivingFunction] = []
    setting = cfg.fp.setting
    for i in range(n):
        gen = path_generator(cfg.seed, i)
        out = _run_path(gen, mode, float(cfg.kappa), rho, prop, fr, fi, float(cfg.T), float(cfg.dt_max),
                        levels, tau[i], lw_at[i], record, rec_t, rec_w, c_h, cgrid, float(radius), stop_on_exit)
        final[i], gmin[i], reason[i], inside[i], nrec, lw_end[i] = out
        if record:
            if nrec < 0:
                raise ConfigError("record buffer too small; raise rec_cap")
            if nrec >= 2:
                drives.append(from_samples(rec_t[:nrec].copy(), rec_w[:nrec].copy(), setting, family="sle_kappa_rho"))
    return dict(final=final, gmin=gmin, reason=reason, inside=inside, tau=tau, lw_at=lw_at,
                lw_end=lw_end, levels=levels, drives=drives, importance=prop != rho, prop=prop)


def simulate_drive(
    cfg: SimulationConfig,
    record_paths: bool = False,
    proposal_rho: Optional[float] = None,
    rec_cap: int = 1 << 20,
):
    """Simulate ``cfg.n_paths`` driving paths up to tau_eps or T.

    Returns (list of sampled DrivingFunction, PathStats).  The list is empty
    unless ``record_paths``.  With ``proposal_rho`` the paths follow that
    weight and ``PathStats.log_weight`` holds the log likelihood ratio back to
    ``cfg.rho`` (at tau_eps for hitting paths).
    """
    r = _simulate(cfg, [cfg.eps_stop], proposal_rho, None, 0.0, False, record_paths, rec_cap)
    hit = r["reason"] == STOP_EPS
    tau = r["tau"][:, 0]
    logw = np.where(hit, r["lw_at"][:, 0], r["lw_end"]) if r["importance"] else np.zeros(hit.size)
    est = _estimate(hit, logw if r["importance"] else None)
    stats = PathStats(r["final"], hit, tau, r["gmin"], r["reason"].astype(int), logw, est,
                      {"kappa": cfg.kappa, "rho": cfg.rho, "eps": cfg.eps_stop, "T": cfg.T, "seed": cfg.seed,
                       "proposal_rho": r["prop"]})
    return r["drives"], stats


def hitting_probabilities(
    cfg: SimulationConfig,
    eps_levels: Sequence[float],
    proposal_rho: Optional[float] = None,
) -> List[Estimate]:
    """P[tau_eps <= T] for each eps, from one batch of paths (ordered as given)."""
    r = _simulate(cfg, eps_levels, proposal_rho, None, 0.0, False, False, 0)
    levels = list(r["levels"])
    out = []
    for e in eps_levels:
        j = levels.index(float(e))
        ind = ~np.isnan(r["tau"][:, j])
        out.append(_estimate(ind, r["lw_at"][:, j] if r["importance"] else None))
    return out


def fit_hitting_slope(eps_levels: Sequence[float], estimates: Sequence[Estimate]):
    """Least-squares slope and prefactor of log p against log eps."""
    x = np.log(np.asarray(eps_levels, dtype=float))
    p = np.array([e.p for e in estimates])
    if np.any(p <= 0):
        return -math.inf, 0.0
    slope, icpt = np.polyfit(x, np.log(p), 1)
    return float(slope), float(math.exp(icpt))


def tube_probability(cfg: SimulationConfig, center: DrivingFunction, radius: float) -> Estimate:
    """Fraction of paths with sup |W - center| < radius on [0, T].

    Paths that reach tau_eps before T count as leaving the tube.
    """
    if not radius > 0:
        raise ConfigError("radius must be positive")
    if center.horizon < cfg.T:
        raise ConfigError("center is not defined on [0, T]")
    r = _simulate(cfg, [cfg.eps_stop], None, center, radius, True, False, 0)
    ok = r["inside"] & (r["reason"] == STOP_T)
    return _estimate(ok, None)
