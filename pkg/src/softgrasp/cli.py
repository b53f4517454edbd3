"""Command-line entry point: ``softgrasp <subcommand> ...``.

Physical quantities carry their unit in the flag value (``--mass 0.5kg``,
``--spacing 5mm``); bare numbers are rejected except for the normalized
``contact`` inputs. Exit codes: 0 success, 1 usage or invalid input,
2 infeasible or ungraspable, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .contact import (
    ContactPatch,
    QuadratureError,
    SoftMaterial,
    friction_integrals,
    max_moment,
    torque_curve,
    write_curve_csv,
)
from .forcemap import compute_force_map, config_from_problem, export_map, map_rows
from .liftsim import (
    DEFAULT_SPEED_GRID,
    ControlMode,
    ControllerConfig,
    SimObject,
    find_max_speed,
    simulate_lift,
)
from .mesh import MeshParseError, load_mesh
from .solver import (
    DegenerateBasisError,
    InfeasibleGraspError,
    NonConvergenceError,
    SolverError,
    solve_grasp_force,
)
from .wrench import EstimationError, WrenchFeedback, estimate_com, gravity_line

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3

UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "mass": {"kg": 1.0, "g": 1e-3},
    "force": {"N": 1.0, "mN": 1e-3},
    "moment": {"N*m": 1.0, "Nm": 1.0, "N*mm": 1e-3, "Nmm": 1e-3},
    "speed": {"m/s": 1.0, "mm/s": 1e-3},
    "time": {"s": 1.0, "ms": 1e-3},
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z*/]*)\s*$")


class UsageError(Exception):
    pass


def parse_quantity(text: str, kind: str) -> float:
    """SI value of a number with a mandatory unit suffix of the given kind."""
    m = _QUANTITY.match(text)
    if not m:
        raise UsageError(f"cannot parse {kind} {text!r}")
    value, unit = m.groups()
    table = UNITS[kind]
    if not unit:
        raise UsageError(f"{kind} {text!r} needs a unit suffix ({', '.join(table)})")
    if unit not in table:
        raise UsageError(f"unknown {kind} unit {unit!r} in {text!r} (use {', '.join(table)})")
    return float(value) * table[unit]


def parse_vector(text: str, kind: str) -> list:
    """Comma-separated 3-vector; a unit on the last component applies to bare ones."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise UsageError(f"expected three comma-separated components, got {text!r}")
    m = _QUANTITY.match(parts[-1])
    unit = m.group(2) if m else ""
    out = []
    for p in parts:
        pm = _QUANTITY.match(p)
        if pm and not pm.group(2) and unit:
            p = p + unit
        out.append(parse_quantity(p, kind))
    return out


def _bare_or_unit(text: str, kind: str) -> float:
    m = _QUANTITY.match(text)
    if m and not m.group(2):
        return float(m.group(1))
    return parse_quantity(text, kind)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_manifest(out: Path, subcommand: str, config: dict, inputs, timings, no_timestamp):
    manifest = {
        "tool": "softgrasp",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(out): _sha256(out)},
    }
    if not no_timestamp:
        manifest["timings"] = timings
        manifest["created"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    path = out.with_name(out.name + ".manifest.json")
    path.write_text(_dump(manifest), encoding="utf-8")
    return path


def _emit(result: dict, args, subcommand: str, config: dict, inputs, t0: float):
    text = _dump(result)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        _write_manifest(out, subcommand, config, inputs,
                        {"wall_s": time.perf_counter() - t0}, args.no_timestamp)
    else:
        sys.stdout.write(text)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def cmd_contact(args) -> int:
    t0 = time.perf_counter()
    F_n = _bare_or_unit(args.Fn, "force")
    if args.R is not None:
        R = _bare_or_unit(args.R, "length")
        if not (F_n > 0 and R > 0):
            raise UsageError("--R needs a positive --Fn and a positive radius")
        c = R / F_n**args.gamma
    else:
        c = _bare_or_unit(args.c, "length")
    try:
        mat = SoftMaterial(c, args.gamma, args.k)
        patch = ContactPatch.from_force(F_n, args.mu, mat)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    curve = torque_curve(mat, args.samples, args.d_max, method=args.method)
    m_max = max_moment(patch, mat)
    resid = curve.ellipse_residual()
    result = {
        "R": patch.radius, "F_max": args.mu * F_n, "M_max": m_max,
        "material": {"c": mat.c, "gamma": mat.gamma, "k": mat.k},
        "samples": args.samples, "d_max_over_R": args.d_max,
        "max_abs_ellipse_residual": float(np.max(np.abs(resid))),
    }
    if args.d_c is not None:
        pt = friction_integrals(_bare_or_unit(args.d_c, "length"), patch, mat, method=args.method)
        result["point"] = {"d_c": pt.d_c, "F_t": pt.F_t, "M_n": pt.M_n}
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    if args.curve:
        out = Path(args.curve)
        write_curve_csv(curve, out)
        _write_manifest(out, "contact", config, [], {"wall_s": time.perf_counter() - t0},
                        args.no_timestamp)
    _emit(result, args, "contact", config, [], t0)
    return EXIT_OK


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    problem = _read_json(args.problem)
    if not isinstance(problem, dict):
        raise UsageError("problem file must hold a JSON object")
    try:
        cfg, W = config_from_problem(problem)
    except KeyError as exc:
        raise UsageError(f"problem is missing field {exc.args[0]!r}") from exc
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid problem: {exc}") from exc
    config = {"problem": problem}
    try:
        sol = solve_grasp_force(cfg, W)
    except DegenerateBasisError as exc:
        raise UsageError(str(exc)) from exc
    except InfeasibleGraspError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc),
                "best_residual": getattr(exc, "best_residual", None)}
        _emit(diag, args, "solve", config, [args.problem], t0)
        return EXIT_INFEASIBLE
    except (NonConvergenceError, QuadratureError, SolverError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc),
                "best_residual": getattr(exc, "best_residual", None)}
        _emit(diag, args, "solve", config, [args.problem], t0)
        return EXIT_NUMERIC
    result = sol.to_dict()
    result["total"] = sol.total
    _emit(result, args, "solve", config, [args.problem], t0)
    return EXIT_OK


def cmd_com(args) -> int:
    t0 = time.perf_counter()
    doc = _read_json(args.snapshots)
    snaps = doc.get("snapshots") if isinstance(doc, dict) else doc
    if not isinstance(snaps, list):
        raise UsageError("snapshot file must hold a list of snapshots")
    try:
        feedback = [WrenchFeedback.from_dict(s) for s in snaps]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid snapshot: {exc}") from exc
    try:
        lines = [gravity_line(fb) for fb in feedback]
        com = estimate_com(lines, args.angle_min)
    except EstimationError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "condition": exc.condition}
        _emit(diag, args, "com", {"angle_min": args.angle_min}, [args.snapshots], t0)
        return EXIT_NUMERIC
    result = {"G": lines[0].G.tolist(), "com": com.l.tolist(), "residual": com.residual}
    _emit(result, args, "com", {"angle_min": args.angle_min}, [args.snapshots], t0)
    return EXIT_OK


def cmd_map(args) -> int:
    t0 = time.perf_counter()
    try:
        mesh = load_mesh(args.mesh, units=args.units)
    except OSError as exc:
        raise UsageError(f"cannot read mesh {args.mesh}: {exc.strerror}") from exc
    except MeshParseError as exc:
        raise UsageError(f"mesh {args.mesh}: {exc}") from exc
    com = parse_vector(args.com, "length")
    mass = parse_quantity(args.mass, "mass")
    spacing = parse_quantity(args.spacing, "length")
    try:
        mat = SoftMaterial(parse_quantity(args.c, "length"), args.gamma, args.k)
        entries = compute_force_map(mesh, com, mass, args.mu, mat, spacing,
                                    grasp_dir=parse_vector(args.grasp_dir, "length")
                                    if args.grasp_dir else (1.0, 0.0, 0.0),
                                    workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not entries:
        raise UsageError("no grasp candidates: the ray grid missed the mesh")
    rows = map_rows(entries)
    if args.no_timestamp:
        for r in rows:
            r["solve_ms"] = 0.0
    out = Path(args.out)
    export_map(rows, out, args.format)
    if args.problems:
        with Path(args.problems).open("w", encoding="utf-8", newline="\n") as fh:
            for e in entries:
                fh.write(json.dumps(e.problem, sort_keys=True) + "\n")
    config = {"mesh": args.mesh, "units": args.units, "com_m": com, "mass_kg": mass,
              "mu": args.mu, "spacing_m": spacing,
              "material": {"c": mat.c, "gamma": mat.gamma, "k": mat.k},
              "format": args.format or out.suffix.lstrip(".") or "csv"}
    timings = {"wall_s": time.perf_counter() - t0,
               "mean_solve_ms": float(np.mean([e.solve_ms for e in entries]))}
    _write_manifest(out, "map", config, [args.mesh], timings, args.no_timestamp)
    n_ok = sum(e.feasible for e in entries)
    sys.stdout.write(_dump({"entries": len(entries), "feasible": n_ok, "out": str(out)}))
    return EXIT_OK


def cmd_sim(args) -> int:
    t0 = time.perf_counter()
    obj = SimObject(parse_quantity(args.mass, "mass"), parse_vector(args.com, "length"),
                    args.mu, parse_quantity(args.max_force, "force"),
                    half_width=parse_quantity(args.half_width, "length"))
    ctl = ControllerConfig(
        mode=ControlMode(args.mode),
        latency=parse_quantity(args.latency, "time"),
        force_noise=parse_quantity(args.force_noise, "force"),
        moment_noise=parse_quantity(args.moment_noise, "moment"),
        initial_force=parse_quantity(args.initial_force, "force"),
        lift_speed=parse_quantity(args.speed, "speed"),
        seed=args.seed,
    )
    dt = parse_quantity(args.dt, "time")
    config = {"object": {"mass": obj.mass, "com": list(obj.com), "mu": obj.mu,
                         "max_safe_force": obj.max_safe_force, "half_width": obj.half_width},
              "controller": {k: (v.value if isinstance(v, ControlMode) else v)
                             for k, v in vars(ctl).items()},
              "dt": dt}
    if args.find_max_speed:
        grid = ([parse_quantity(s, "speed") for s in args.grid.split(",")]
                if args.grid else DEFAULT_SPEED_GRID)
        try:
            search = find_max_speed(obj, ctl, grid, dt=dt)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        config["grid"] = list(search.speeds)
        result = {"v_max": search.v_max, "speeds": list(search.speeds),
                  "successes": list(search.successes), "monotone": search.monotone}
        _emit(result, args, "sim", config, [], t0)
        return EXIT_OK
    trace = simulate_lift(obj, ctl, dt=dt)
    summary = {"outcome": trace.outcome, "steps": len(trace.t),
               "predicted_force": trace.predicted_force,
               "peak_required": float(np.max(trace.required)),
               "min_margin": float(np.min(trace.actual - trace.required))}
    if args.out:
        out = Path(args.out)
        trace.write_csv(out)
        _write_manifest(out, "sim", config, [], {"wall_s": time.perf_counter() - t0},
                        args.no_timestamp)
    sys.stdout.write(_dump(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="softgrasp", description="Minimum grasp force for soft two-finger grasps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help="write the JSON result here (default: stdout)"):
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit timings and creation time from the manifest")

    c = sub.add_parser("contact", help="limit-surface curve of one contact patch",
                       description="Normalized torque curve and limit-surface figures. "
                                   "--Fn/--R/--c accept bare numbers (N, m) or unit suffixes.")
    c.add_argument("--k", type=float, default=2.0, help="pressure shape coefficient")
    c.add_argument("--mu", type=float, default=0.5)
    c.add_argument("--Fn", default="1", help="normal force (default 1 N)")
    c.add_argument("--R", help="patch radius at --Fn; overrides --c")
    c.add_argument("--c", default="2.07mm", help="power-law coefficient (length at 1 N)")
    c.add_argument("--gamma", type=float, default=0.259)
    c.add_argument("--samples", type=int, default=101)
    c.add_argument("--d-max", type=float, default=10.0, help="largest d_c/R of the curve")
    c.add_argument("--d-c", help="also integrate one point at this COR distance")
    c.add_argument("--method", choices=("adaptive", "grid"), default="adaptive")
    c.add_argument("--curve", help="write the torque curve CSV here")
    common(c)
    c.set_defaults(func=cmd_contact)

    s = sub.add_parser("solve", help="minimum grasp force for one problem JSON",
                       description="Reads {W_req, n_A, n_B, mu_A, mu_B, r_A, r_B, material} "
                                   "in SI units.")
    s.add_argument("problem")
    common(s)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("com", help="gravity and center of mass from feedback snapshots",
                       description="Reads a JSON list of {F_A, M_A, F_B, M_B, r_A, r_B} "
                                   "hold-phase snapshots in SI units.")
    m.add_argument("snapshots")
    m.add_argument("--angle-min", type=float, default=5.0,
                   help="reject line sets narrower than this many degrees")
    common(m)
    m.set_defaults(func=cmd_com)

    f = sub.add_parser("map", help="force map over a mesh")
    f.add_argument("--mesh", required=True)
    f.add_argument("--units", choices=("m", "mm"), default="m", help="mesh file units")
    f.add_argument("--com", required=True, help="x,y,z with unit, e.g. 0,0,5mm")
    f.add_argument("--mass", required=True, help="e.g. 0.3kg")
    f.add_argument("--mu", type=float, default=0.5)
    f.add_argument("--spacing", default="5mm")
    f.add_argument("--grasp-dir", help="jaw axis as x,y,z (default 1,0,0m)")
    f.add_argument("--c", default="2.07mm")
    f.add_argument("--gamma", type=float, default=0.259)
    f.add_argument("--k", type=float, default=2.0)
    f.add_argument("--format", choices=("csv", "json"))
    f.add_argument("--workers", type=int, help="process count (default: SOFTGRASP_THREADS or 1)")
    f.add_argument("--problems", help="also write one solve-problem JSON per entry (JSON lines)")
    f.add_argument("--out", required=True)
    f.add_argument("--no-timestamp", action="store_true",
                   help="omit timings from the manifest and zero the solve_ms column")
    f.set_defaults(func=cmd_map)

    e = sub.add_parser("sim", help="simulated reach-lift-hold episode")
    e.add_argument("--mode", choices=[m.value for m in ControlMode], default="feedback")
    e.add_argument("--speed", default="1mm/s")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--mass", default="0.4kg")
    e.add_argument("--com", default="0,0,0m")
    e.add_argument("--mu", type=float, default=0.5)
    e.add_argument("--max-force", default="50N", help="crush limit")
    e.add_argument("--half-width", default="20mm")
    e.add_argument("--latency", default="200ms")
    e.add_argument("--force-noise", default="0.1N")
    e.add_argument("--moment-noise", default="1N*mm")
    e.add_argument("--initial-force", default="2N")
    e.add_argument("--dt", default="2ms")
    e.add_argument("--find-max-speed", action="store_true",
                   help="search the speed grid instead of running one episode")
    e.add_argument("--grid", help="comma-separated speeds with units, e.g. 1mm/s,2mm/s")
    e.add_argument("--out", help="trace CSV (or search JSON with --find-max-speed)")
    e.add_argument("--no-timestamp", action="store_true")
    e.set_defaults(func=cmd_sim)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
