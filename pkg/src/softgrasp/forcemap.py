"""Force maps: minimum grasp force over sampled parallel-jaw grasps on a mesh."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .contact import DEFAULT_MATERIAL, SoftMaterial
from .mesh import Mesh, cast_parallel_rays, plane_frame
from .solver import (
    EPS_PARALLEL,
    GraspConfig,
    SlipState,
    SolverError,
    solve_grasp_force,
)
from .wrench import RequiredWrench, required_wrench_from_gravity, rotation_about

__all__ = [
    "GraspCandidate",
    "ForceMapEntry",
    "sample_grasp_points",
    "compute_force_map",
    "export_map",
    "read_map_csv",
    "map_rows",
    "STANDARD_GRAVITY",
    "INFEASIBLE_RATIO",
    "DEGENERATE_TILT_DEG",
]

STANDARD_GRAVITY = 9.80665
INFEASIBLE_RATIO = 10.0
DEGENERATE_TILT_DEG = 0.5
COLUMNS = ("y", "z", "F_min", "state", "feasible", "solve_ms")


@dataclass(frozen=True)
class GraspCandidate:
    """One parallel-jaw grasp.

    position holds the plane coordinates (along u, w of the grasp plane; y, z
    for a grasp along x). n_A, n_B are push normals pointing into the object,
    possibly tilted away from a degenerate direction (``tilt_deg`` > 0).
    """

    position: tuple
    contact_A: np.ndarray
    contact_B: np.ndarray
    n_A: np.ndarray
    n_B: np.ndarray
    tilt_deg: float = 0.0

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.contact_A + self.contact_B)

    @property
    def r_A(self) -> np.ndarray:
        return self.contact_A - self.midpoint

    @property
    def r_B(self) -> np.ndarray:
        return self.contact_B - self.midpoint


@dataclass(frozen=True)
class ForceMapEntry:
    candidate: GraspCandidate
    F_min: float | None
    state: SlipState | None
    solve_ms: float
    feasible: bool
    problem: dict | None = None
    error: str | None = None

    @property
    def y(self) -> float:
        return self.candidate.position[0]

    @property
    def z(self) -> float:
        return self.candidate.position[1]


def _push_normal(face_normal, direction, want_positive: bool):
    n = -np.asarray(face_normal, dtype=float)
    if (n @ direction > 0) != want_positive:
        n = -n
    return n


def _grid_axis(lo, hi, anchor, spacing):
    k0 = math.ceil((lo - anchor) / spacing - 1e-9)
    k1 = math.floor((hi - anchor) / spacing + 1e-9)
    return anchor + spacing * np.arange(k0, k1 + 1)


def sample_grasp_points(mesh: Mesh, spacing: float, grasp_dir=(1.0, 0.0, 0.0), *, anchor=None,
                        gravity_dir=(0.0, 0.0, -1.0), tilt_deg: float = DEGENERATE_TILT_DEG):
    """Candidates from a uniform ray grid over the mesh footprint.

    The grid lives in the plane normal to ``grasp_dir``, is aligned so that one
    node projects onto ``anchor`` (the bounding-box center by default), and is
    ordered row-major in (u, w). Rays with fewer than two surface hits are
    skipped. Contact normals parallel to the grasp direction are rotated
    together by ``tilt_deg`` about the gravity axis, which keeps the pair
    anti-parallel; the applied tilt is recorded on the candidate.
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    d = np.asarray(grasp_dir, dtype=float)
    d = d / np.linalg.norm(d)
    u, w = plane_frame(d)
    V = mesh.vertices
    lo_u, hi_u = (V @ u).min(), (V @ u).max()
    lo_w, hi_w = (V @ w).min(), (V @ w).max()
    if anchor is None:
        anchor = 0.5 * (V.min(axis=0) + V.max(axis=0))
    anchor = np.asarray(anchor, dtype=float)
    gu = _grid_axis(lo_u, hi_u, anchor @ u, spacing)
    gw = _grid_axis(lo_w, hi_w, anchor @ w, spacing)
    U, W = np.meshgrid(gu, gw, indexing="ij")
    pts = np.column_stack([U.ravel(), W.ravel()])
    hits = cast_parallel_rays(mesh, d, pts)
    tilt_axis = np.asarray(gravity_dir, dtype=float)
    if np.linalg.norm(np.cross(tilt_axis, d)) < 1e-6:
        tilt_axis = w
    R_tilt = rotation_about(tilt_axis, math.radians(tilt_deg))
    out = []
    for (pu, pw), hs in zip(pts, hits):
        if len(hs) < 2:
            continue
        first, last = hs[0], hs[-1]
        base = pu * u + pw * w
        cA = base + first.depth * d
        cB = base + last.depth * d
        nA = _push_normal(mesh.normals[first.face], d, True)
        nB = _push_normal(mesh.normals[last.face], d, False)
        tilt = 0.0
        if (np.linalg.norm(np.cross(nA, d)) <= EPS_PARALLEL
                or np.linalg.norm(np.cross(nB, d)) <= EPS_PARALLEL):
            nA, nB = R_tilt @ nA, R_tilt @ nB
            tilt = tilt_deg
        out.append(GraspCandidate((float(pu), float(pw)), cA, cB, nA / np.linalg.norm(nA),
                                  nB / np.linalg.norm(nB), tilt))
    return out


def _problem(candidate: GraspCandidate, com, G, mu, material: SoftMaterial, grasp_dir):
    return {
        "W_req": required_wrench_from_gravity(G, np.asarray(com, dtype=float) - candidate.midpoint).vector.tolist(),
        "n_A": candidate.n_A.tolist(),
        "n_B": candidate.n_B.tolist(),
        "mu_A": float(mu),
        "mu_B": float(mu),
        "r_A": candidate.r_A.tolist(),
        "r_B": candidate.r_B.tolist(),
        "e_x": [float(v) for v in grasp_dir],
        "material": {"c": material.c, "gamma": material.gamma, "k": material.k},
    }


def config_from_problem(problem: dict):
    """(GraspConfig, RequiredWrench) from a solve-problem dictionary."""
    mat = problem.get("material") or {}
    material = SoftMaterial(**{k: float(v) for k, v in mat.items()}) if mat else DEFAULT_MATERIAL
    cfg = GraspConfig(problem["n_A"], problem["n_B"], problem["mu_A"], problem["mu_B"],
                      problem["r_A"], problem["r_B"], material,
                      np.asarray(problem.get("e_x", (1.0, 0.0, 0.0)), dtype=float))
    return cfg, RequiredWrench.from_vector(problem["W_req"])


def _solve_one(problem):
    t0 = time.perf_counter()
    try:
        cfg, W = config_from_problem(problem)
        sol = solve_grasp_force(cfg, W)
        result = (sol.total, sol.state.value, None)
    except (SolverError, ValueError) as exc:
        result = (None, None, f"{type(exc).__name__}: {exc}")
    return result + ((time.perf_counter() - t0) * 1e3,)


def _solve_chunk(problems):
    return [_solve_one(p) for p in problems]


def _workers(requested):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("SOFTGRASP_THREADS")
    return max(1, int(env)) if env else 1


def compute_force_map(mesh: Mesh, com, mass: float, mu: float = 0.5,
                      material: SoftMaterial = DEFAULT_MATERIAL, spacing: float = 0.005, *,
                      grasp_dir=(1.0, 0.0, 0.0), gravity_dir=(0.0, 0.0, -1.0),
                      g: float = STANDARD_GRAVITY, workers: int | None = None,
                      candidates=None):
    """Minimum total grasp force at every sampled grasp of ``mesh``.

    The object hangs under gravity (``mass`` in kg) with its center of mass
    at ``com``; the gripper frame is the mesh frame with x along
    ``grasp_dir``. Entries whose solve fails, or whose force exceeds ten
    times the smallest feasible force of the map, are marked infeasible.
    ``workers`` > 1 spreads the solves over processes; results and ordering
    do not depend on it.
    """
    if not mass >= 0:
        raise ValueError(f"mass must be non-negative, got {mass}")
    if not mu > 0:
        raise ValueError(f"friction coefficient must be positive, got {mu}")
    d = np.asarray(grasp_dir, dtype=float)
    d = d / np.linalg.norm(d)
    gdir = np.asarray(gravity_dir, dtype=float)
    G = mass * g * gdir / np.linalg.norm(gdir)
    if candidates is None:
        candidates = sample_grasp_points(mesh, spacing, d, anchor=com, gravity_dir=gdir)
    problems = [_problem(c, com, G, mu, material, d) for c in candidates]
    n_workers = _workers(workers)
    if n_workers > 1 and len(problems) > 1:
        size = math.ceil(len(problems) / (4 * n_workers))
        chunks = [problems[i:i + size] for i in range(0, len(problems), size)]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = [r for part in pool.map(_solve_chunk, chunks) for r in part]
    else:
        results = _solve_chunk(problems)
    feasible_forces = [r[0] for r in results if r[0] is not None and r[0] > 0]
    global_min = min(feasible_forces) if feasible_forces else None
    entries = []
    for cand, prob, (F, state, err, ms) in zip(candidates, problems, results):
        ok = F is not None
        if ok and global_min is not None and F > INFEASIBLE_RATIO * global_min:
            ok = False
        entries.append(ForceMapEntry(cand, F, SlipState(state) if state else None, ms, ok, prob, err))
    return entries


def _fmt(v):
    return "" if v is None else repr(float(v))


def map_rows(entries):
    """Rows of the export schema; F_min is blank for infeasible entries."""
    rows = []
    for e in entries:
        if isinstance(e, dict):
            rows.append(e)
            continue
        rows.append({
            "y": e.y, "z": e.z,
            "F_min": e.F_min if e.feasible else None,
            "state": e.state.value if e.state is not None else "",
            "feasible": 1 if e.feasible else 0,
            "solve_ms": e.solve_ms,
        })
    return rows


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r["y"]), _fmt(r["z"]), _fmt(r["F_min"]), r["state"],
                         str(int(r["feasible"])), _fmt(r["solve_ms"])])
    return buf.getvalue()


def export_map(entries, path, fmt: str | None = None) -> Path:
    """Write a force map as CSV or JSON (chosen by ``fmt`` or the file suffix)."""
    rows = map_rows(entries)
    if not rows:
        raise ValueError("cannot export an empty force map")
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "csv":
        path.write_text(_csv_text(rows), encoding="utf-8", newline="")
    elif fmt == "json":
        doc = {"columns": list(COLUMNS), "entries": [
            {"y": float(r["y"]), "z": float(r["z"]),
             "F_min": None if r["F_min"] is None else float(r["F_min"]),
             "state": r["state"], "feasible": bool(r["feasible"]), "solve_ms": float(r["solve_ms"])}
            for r in rows]}
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unsupported export format {fmt!r}")
    return path


def read_map_csv(path):
    """Rows of an exported CSV, in the form accepted by export_map."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"unexpected force-map header {reader.fieldnames}")
        rows = []
        for r in reader:
            rows.append({
                "y": float(r["y"]), "z": float(r["z"]),
                "F_min": float(r["F_min"]) if r["F_min"] else None,
                "state": r["state"], "feasible": int(r["feasible"]),
                "solve_ms": float(r["solve_ms"]),
            })
    return rows
