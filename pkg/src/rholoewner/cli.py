"""Command-line front end.

    rholoewner trace     --family chordal --rho 2 --x0 1 --T 1 --steps 1000
    rholoewner energy    --family chordal --rho 2 --x0 1 --T 1
    rholoewner flowline  --kind boundary --rho 2 --x0 1 --T 1
    rholoewner sample    --kappa 1 --rho 1 --v0 3.14159 --paths 10000 --seed 7
    rholoewner dirichlet --beta 0.4 --R 10,20,40,80
    rholoewner verify    --seed 1234

Artifacts go to --out, else $RHOLOEWNER_OUT, else ./out.  ``--config FILE``
reads key=value lines whose values override the flags.  Errors are printed
as JSON on stderr (and written to error.json) with exit status 2.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np

from . import __version__
from . import driving as drv
from .driving import ForcePointSpec, Setting
from .errors import ConfigError, LoewnerError

ENV_OUT = "RHOLOEWNER_OUT"
DIGITS = 12
FAMILIES = ("chordal", "radial", "spiral", "ray", "zero", "wholeplane", "csv")


# -- formatting ----------------------------------------------------------------------


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{DIGITS}g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, complex):
        return [_num(obj.real), _num(obj.imag)]
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: List[str], rows: Iterable[Iterable[float]]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{float(v):.{DIGITS}g}" for v in row) + "\n")


def write_svg(path: Path, curves: List[np.ndarray], marks: Dict[str, complex], size=(800, 800)) -> None:
    """Polylines scaled into a fixed viewport with 5% margins; y points up."""
    pts = np.concatenate([np.asarray(c, dtype=complex) for c in curves] + [np.array(list(marks.values()), complex)])
    pts = pts[np.isfinite(pts)]
    x0, x1 = float(pts.real.min()), float(pts.real.max())
    y0, y1 = float(pts.imag.min()), float(pts.imag.max())
    w, h = size
    span = max(x1 - x0, y1 - y0, 1e-12)
    scale = 0.9 * min(w, h) / span
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)

    def px(z):
        return w / 2 + (z.real - cx) * scale, h / 2 - (z.imag - cy) * scale

    colors = ["#1f4e9c", "#c2410c", "#15803d", "#7e22ce"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect width="{w}" height="{h}" fill="white"/>']
    for k, c in enumerate(curves):
        c = np.asarray(c, dtype=complex)
        c = c[np.isfinite(c)]
        coords = " ".join("%.3f,%.3f" % px(z) for z in c)
        out.append(f'<polyline fill="none" stroke="{colors[k % len(colors)]}" stroke-width="1.5" points="{coords}"/>')
    for name, z in marks.items():
        x, y = px(complex(z))
        shape = (f'<circle cx="{x:.3f}" cy="{y:.3f}" r="4" fill="black"/>' if name == "origin"
                 else f'<rect x="{x - 4:.3f}" y="{y - 4:.3f}" width="8" height="8" fill="#dc2626"/>')
        out.append(shape)
        out.append(f'<text x="{x + 6:.3f}" y="{y - 6:.3f}" font-size="12" font-family="sans-serif">{name}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")


# -- argument handling ------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--x0", type=float, default=None, help="boundary force point (chordal)")
    p.add_argument("--z0", type=complex, default=None, help="interior force point, e.g. 0.3+1j")
    p.add_argument("--v0", type=float, default=None, help="radial force-point angle")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--format", choices=("csv", "svg", "json"), default=None, help="write only this format")
    p.add_argument("--config", type=str, default=None, help="key=value file overriding flags")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rholoewner", description="Loewner chains with a force point and their energy.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="closed-form SLE_0(rho) curves")
    _common(p)
    p.add_argument("--family", choices=FAMILIES[:-1], default="chordal")
    p.add_argument("--convention", choices=("standard", "inverted"), default="inverted")

    p = sub.add_parser("energy", help="energy report for a driving function")
    _common(p)
    p.add_argument("--family", choices=FAMILIES, default="chordal")
    p.add_argument("--drive-rho", type=float, default=None, help="weight of the closed-form driving (default --rho)")
    p.add_argument("--driving-csv", type=str, default=None, help="t,value samples (family csv)")
    p.add_argument("--dt", type=float, default=None)

    p = sub.add_parser("flowline", help="flow-line of the harmonic angle field")
    _common(p)
    p.add_argument("--kind", choices=("boundary", "interior", "wholeplane"), default="boundary")
    p.add_argument("--ds", type=float, default=2e-3)

    p = sub.add_parser("sample", help="Monte Carlo driving paths")
    _common(p)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--dt-max", type=float, default=1e-3)
    p.add_argument("--per-path", action="store_true", help="include per-path records (large)")

    p = sub.add_parser("dirichlet", help="renormalised Dirichlet energy of a corner map")
    _common(p)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--R", type=str, default="10,20,40,80")
    p.add_argument("--resolution", type=int, default=100)

    p = sub.add_parser("verify", help="run the acceptance suite")
    _common(p)
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--only", type=str, default=None, help="comma-separated criterion numbers")
    return ap


def read_config(path: str) -> Dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    if not args.config:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    types = {a.dest: a.type for a in sub._actions}
    for k, v in read_config(args.config).items():
        if k not in types or k in ("config", "help"):
            raise ConfigError(f"unknown config key {k!r} for command {args.command}")
        conv = types[k]
        if conv is None:
            cur = getattr(args, k)
            conv = (lambda s: s.lower() in ("1", "true", "yes")) if isinstance(cur, bool) else str
        try:
            setattr(args, k, conv(v))
        except ValueError as exc:
            raise ConfigError(f"bad value for {k}: {v!r}") from exc
    return args


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(ENV_OUT) or "out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _want(args, fmt) -> bool:
    return args.format is None or args.format == fmt


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"{args.command}: missing --{', --'.join(missing)}")


def _force_point(args, rho) -> ForcePointSpec:
    given = [n for n in ("x0", "z0", "v0") if getattr(args, n) is not None]
    if len(given) != 1:
        raise ConfigError("give exactly one of --x0, --z0, --v0")
    if args.x0 is not None:
        return ForcePointSpec.boundary(args.x0, rho)
    if args.z0 is not None:
        return ForcePointSpec.interior(args.z0, rho)
    return ForcePointSpec.radial(args.v0, rho)


def _drive_for(args, rho) -> drv.DrivingFunction:
    fam = args.family
    if fam == "chordal":
        _need(args, "x0")
        return drv.make_chordal_sle0(rho, args.x0)
    if fam == "radial":
        _need(args, "v0")
        return drv.make_radial_sle0(rho, args.v0)
    if fam == "spiral":
        _need(args, "z0")
        return drv.make_chordal_sle0_spiral(args.z0)
    if fam == "ray":
        return drv.make_ray(rho)
    if fam == "zero":
        return drv.make_zero(Setting.RADIAL if args.v0 is not None else Setting.CHORDAL)
    if fam == "csv":
        if not getattr(args, "driving_csv", None):
            raise ConfigError("family csv needs --driving-csv")
        data = np.loadtxt(args.driving_csv, delimiter=",", skiprows=1, ndmin=2)
        st = Setting.RADIAL if args.v0 is not None else Setting.CHORDAL
        return drv.from_samples(data[:, 0], data[:, 1], st)
    raise ConfigError(f"family {fam} has no driving function here")


def _horizon_T(args, d: drv.DrivingFunction, default=1.0) -> float:
    T = args.T if args.T is not None else default
    if d.is_sampled and args.T is None:
        T = d.horizon
    if T > d.horizon:
        raise ConfigError(f"T={T} exceeds the driving horizon {d.horizon:.12g}")
    return T


# -- commands -----------------------------------------------------------------------------


def cmd_trace(args) -> dict:
    from .loewner import trace, trace_wholeplane
    from .acceptance import _circle_fit

    out = _out_dir(args)
    summary: dict = {"command": "trace", "family": args.family}
    marks = {"origin": 0j}
    if args.family == "wholeplane":
        _need(args, "rho")
        c = trace_wholeplane(args.rho, convention=args.convention, n=args.steps or 4000, v0=args.v0)
        summary.update({"rho": args.rho, "convention": args.convention})
        if args.rho == -6.0:
            _, R, res = _circle_fit(c.points)
            summary.update({"circle_radius": R, "circle_fit_residual": res})
    else:
        rho = args.rho if args.rho is not None else 0.0
        d = _drive_for(args, rho)
        T = args.T if args.T is not None else min(1.0, 0.99 * d.horizon)
        c = trace(d, n_steps=args.steps or 1000, T=T)
        summary.update({"rho": rho, "T": T, "n_points": len(c)})
        if args.x0 is not None:
            marks["x0"] = complex(args.x0)
        if args.z0 is not None:
            marks["z0"] = args.z0
        if args.v0 is not None:
            marks["v0"] = cmath.exp(1j * args.v0)
    summary["diameter"] = c.diameter
    if _want(args, "csv"):
        c.to_csv(out / "trace.csv", DIGITS)
    if _want(args, "svg"):
        write_svg(out / "trace.svg", [c.points], marks)
    if _want(args, "json"):
        write_json(out / "trace.json", summary)
    return summary


def cmd_energy(args) -> dict:
    from .energy import bound_certificates, rho_energy_integrated

    _need(args, "rho")
    rho = args.rho
    drho = args.drive_rho if args.drive_rho is not None else rho
    d = _drive_for(args, drho)
    fp = _force_point(args, rho)
    T = _horizon_T(args, d, default=min(1.0, 0.99 * d.horizon))
    rep = rho_energy_integrated(d, fp, T, dt=args.dt)
    rep.certificates = bound_certificates(d, fp, T, dt=args.dt)
    body = {"command": "energy", "family": args.family, "rho": rho, "T": T, **rep.to_dict()}
    if _want(args, "json"):
        write_json(_out_dir(args) / "energy.json", body)
    return body


def cmd_flowline(args) -> dict:
    from .flowline import FlowField, integrate_flowline, polyline_hausdorff
    from .loewner import trace, trace_wholeplane

    _need(args, "rho")
    out = _out_dir(args)
    rho = args.rho
    marks = {"origin": 0j}
    if args.kind == "wholeplane":
        ref = trace_wholeplane(rho, convention="standard", n=args.steps or 4000)
        p = ref.points
        # start on the incoming arm where |z| is twice its minimum, follow 1500 vertices
        i = int(np.argmin(np.abs(np.abs(p[: int(np.argmin(np.abs(p)))]) - 2.0 * np.min(np.abs(p)))))
        j = min(p.size - 1, i + 1500)
        field = FlowField.wholeplane(rho)
        length = float(np.sum(np.abs(np.diff(p[i:j + 1]))))
        lifted = np.unwrap(np.angle(p))
        fl = integrate_flowline(field, p[i], ds=args.ds, max_length=length, branch=(lifted[i],))
        k = i + int(np.argmin(np.abs(p[i:] - fl.points[-1])))
        ref_pts = p[i:k + 1]
    else:
        if args.kind == "boundary":
            _need(args, "x0")
            field = FlowField.boundary(rho, args.x0)
            d = drv.make_chordal_sle0(rho, args.x0)
            marks["x0"] = complex(args.x0)
        else:
            _need(args, "z0")
            if rho != -4.0:
                raise ConfigError("interior flow-lines are compared against the rho = -4 spiral")
            field = FlowField.interior(rho, args.z0)
            d = drv.make_chordal_sle0_spiral(args.z0)
            marks["z0"] = args.z0
        T = args.T if args.T is not None else min(1.0, 0.99 * d.horizon)
        tr = trace(d, n_steps=args.steps or 1000, T=T)
        length = float(np.sum(np.abs(np.diff(tr.points))))
        fl = integrate_flowline(field, 1e-4j, ds=args.ds, max_length=3.0 * length)
        k = int(np.argmin(np.abs(fl.points - tr.points[-1])))
        fl = type(fl)(fl.points[: k + 1], fl.parametrization, fl.domain, fl.times[: k + 1])
        ref_pts = tr.points
    dist = polyline_hausdorff(ref_pts, fl.points)
    diam = float(np.max(np.abs(ref_pts - ref_pts[0])))
    summary = {"command": "flowline", "kind": args.kind, "rho": rho, "n_points": len(fl),
               "hausdorff_to_trace": dist, "relative_to_diameter": dist / diam}
    if _want(args, "csv"):
        fl.to_csv(out / "flowline.csv", DIGITS)
    if _want(args, "svg"):
        write_svg(out / "flowline.svg", [ref_pts, fl.points], marks)
    if _want(args, "json"):
        write_json(out / "flowline.json", summary)
    return summary


def cmd_sample(args) -> dict:
    from .sampler import SimulationConfig, simulate_drive

    _need(args, "kappa", "rho")
    fp = _force_point(args, args.rho)
    cfg = SimulationConfig(args.kappa, fp, T=args.T or 1.0, dt_max=args.dt_max, eps_stop=args.eps,
                           seed=args.seed or 0, n_paths=args.paths or 1000)
    _, stats = simulate_drive(cfg)
    body = {"command": "sample", **stats.to_dict(per_path=args.per_path)}
    if _want(args, "json"):
        write_json(_out_dir(args) / "sample.json", body)
    return body


def cmd_dirichlet(args) -> dict:
    from .dirichlet import corner_map, renormalized_dirichlet

    _need(args, "beta")
    Rs = [float(x) for x in args.R.split(",") if x.strip()]
    res = renormalized_dirichlet(corner_map(args.beta, args.r, Rs[0]), args.beta, Rs, resolution=args.resolution)
    out = _out_dir(args)
    if _want(args, "csv"):
        write_csv(out / "dirichlet.csv", ["R", "log_R", "dirichlet", "renormalized"],
                  zip(res.radii, np.log(res.radii), res.raw, res.bracket))
    body = {"command": "dirichlet", "beta": args.beta, **res.to_dict()}
    if _want(args, "json"):
        write_json(out / "dirichlet.json", body)
    return body


def cmd_verify(args) -> dict:
    from .acceptance import run_criteria

    only = None
    if args.only:
        only = {int(x) for x in args.only.split(",") if x.strip()}
    seed = 1234 if args.seed is None else args.seed
    paths = args.paths or 100_000
    crit = run_criteria(paths=paths, seed=seed, only=only,
                        log=lambda c: print(f"{c.line()}  ({c.elapsed:.1f}s)", flush=True))
    body = {"command": "verify", "seed": seed, "paths": paths,
            "all_passed": all(c.passed for c in crit), "criteria": [c.to_dict() for c in crit]}
    out = _out_dir(args)
    if _want(args, "json"):
        write_json(out / "verify.json", body)
    if _want(args, "csv"):
        write_csv_rows = [(c.number, int(c.passed)) for c in crit]
        write_csv(out / "verify.csv", ["criterion", "passed"], write_csv_rows)
    return body


COMMANDS = {
    "trace": cmd_trace,
    "energy": cmd_energy,
    "flowline": cmd_flowline,
    "sample": cmd_sample,
    "dirichlet": cmd_dirichlet,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = apply_config(args, parser)
        body = COMMANDS[args.command](args)
    except (LoewnerError, OSError, ValueError) as exc:
        err = exc.to_dict() if isinstance(exc, LoewnerError) else {"error": "config", "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        try:
            write_json(_out_dir(args) / "error.json", err)
        except OSError:
            pass
        return 2
    if args.command == "verify":
        return 0 if body["all_passed"] else 1
    if args.command != "sample" or not args.per_path:
        print(json.dumps(_clean(body), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
