import json
import math
from importlib import resources

import numpy as np
import pytest

from softgrasp import cli
from softgrasp.contact import DEFAULT_MATERIAL
from softgrasp.forcemap import (
    COLUMNS,
    INFEASIBLE_RATIO,
    compute_force_map,
    config_from_problem,
    export_map,
    read_map_csv,
    sample_grasp_points,
)
from softgrasp.mesh import Mesh, box_mesh, ellipsoid_mesh, load_mesh
from softgrasp.solver import SlipState, solve_grasp_force


def data_mesh(name, units="m"):
    return load_mesh(resources.files("softgrasp") / "data" / name, units=units)


@pytest.fixture(scope="module")
def plate():
    return data_mesh("plate.obj")


@pytest.fixture(scope="module")
def plate_map(plate):
    return compute_force_map(plate, (0.0, 0.0, 0.0), 0.3, spacing=0.01)


# sampling

def test_cube_candidates_form_uniform_grid():
    cands = sample_grasp_points(data_mesh("cube.obj"), 0.1, anchor=(0.5, 0.5, 0.5))
    ys = sorted({round(c.position[0], 9) for c in cands})
    zs = sorted({round(c.position[1], 9) for c in cands})
    assert len(cands) == len(ys) * len(zs) == 121
    assert np.allclose(np.diff(ys), 0.1) and np.allclose(np.diff(zs), 0.1)
    for c in cands:
        assert c.tilt_deg == 0.5
        assert np.allclose(c.n_A, -c.n_B)
        assert math.degrees(math.acos(c.n_A[0])) == pytest.approx(0.5)
        assert c.contact_A[0] == pytest.approx(0.0) and c.contact_B[0] == pytest.approx(1.0)


def test_candidate_contacts_lie_on_grasp_line():
    cands = sample_grasp_points(ellipsoid_mesh((0.03, 0.05, 0.04)), 0.01)
    assert cands
    for c in cands:
        seg = c.contact_B - c.contact_A
        assert np.linalg.norm(np.cross(seg, [1, 0, 0])) < 1e-12
        assert seg[0] > 0
        assert c.n_A[0] > 0 and c.n_B[0] < 0


def test_sphere_count_grows_quadratically():
    sphere = ellipsoid_mesh((0.05, 0.05, 0.05), n_lat=48, n_lon=96)
    counts = [len(sample_grasp_points(sphere, s)) for s in (0.01, 0.005, 0.0025)]
    for a, b in zip(counts, counts[1:]):
        assert b / a == pytest.approx(4.0, rel=0.15)


def test_open_mesh_single_hit_rays_give_no_candidates():
    sheet = Mesh.from_arrays([[0, -1, -1], [0, 1, -1], [0, 1, 1], [0, -1, 1]], [[0, 1, 2], [0, 2, 3]])
    assert sample_grasp_points(sheet, 0.25) == []


def test_rejects_nonpositive_spacing():
    with pytest.raises(ValueError):
        sample_grasp_points(box_mesh((1, 1, 1)), 0.0)


# force map

def test_symmetric_box_minimum_at_com_aligned_candidate():
    box = box_mesh((0.04, 0.1, 0.08))
    entries = compute_force_map(box, (0.0, 0.0, 0.0), 0.5, spacing=0.01)
    feasible = [e for e in entries if e.feasible]
    best = min(e.F_min for e in feasible)
    at_com = [e for e in entries if abs(e.y) < 1e-12 and abs(e.z) < 1e-12]
    assert len(at_com) == 1
    assert at_com[0].F_min == pytest.approx(best, rel=1e-9)


def test_force_grows_away_from_com_along_plate_scanline(plate_map):
    row = sorted((e for e in plate_map if abs(e.z) < 1e-12), key=lambda e: e.y)
    centre = min(range(len(row)), key=lambda i: abs(row[i].y))
    for side in (row[centre:], row[centre::-1]):
        forces = [e.F_min for e in side]
        assert all(f is not None for f in forces)
        assert all(b >= a * (1 - 1e-12) for a, b in zip(forces, forces[1:]))
        assert forces[-1] > forces[0]


def test_ten_times_rule(plate_map):
    solved = [e.F_min for e in plate_map if e.F_min is not None]
    floor = min(solved)
    for e in plate_map:
        if e.F_min is None:
            assert not e.feasible
        else:
            assert e.feasible == (e.F_min <= INFEASIBLE_RATIO * floor)
    assert any(not e.feasible for e in plate_map)


def test_rejects_bad_inputs(plate):
    with pytest.raises(ValueError):
        compute_force_map(plate, (0, 0, 0), -1.0)
    with pytest.raises(ValueError):
        compute_force_map(plate, (0, 0, 0), 0.3, mu=0.0)


def test_solver_failures_become_infeasible_markers():
    entries = compute_force_map(data_mesh("ellipsoid.obj", "mm"), (0.0, 0.005, 0.0), 0.3, spacing=0.01)
    failed = [e for e in entries if e.F_min is None]
    assert failed
    assert all(not e.feasible and e.error for e in failed)


def test_parallel_workers_do_not_change_results(plate):
    one = compute_force_map(plate, (0.0, 0.01, 0.0), 0.3, spacing=0.02, workers=1)
    two = compute_force_map(plate, (0.0, 0.01, 0.0), 0.3, spacing=0.02, workers=2)
    assert [(e.y, e.z, e.F_min, e.state, e.feasible) for e in one] == \
        [(e.y, e.z, e.F_min, e.state, e.feasible) for e in two]


def test_batch_matches_single_solve_through_cli(tmp_path):
    mesh = box_mesh((0.03, 0.08, 0.06))
    mesh_path = tmp_path / "box.obj"
    from softgrasp.mesh import to_obj
    mesh_path.write_text(to_obj(mesh, precision=17))
    out = tmp_path / "map.csv"
    problems = tmp_path / "problems.jsonl"
    code = cli.main(["map", "--mesh", str(mesh_path), "--units", "m", "--com", "0,10,5mm",
                     "--mass", "0.25kg", "--spacing", "10mm", "--out", str(out),
                     "--problems", str(problems), "--no-timestamp"])
    assert code == 0
    rows = read_map_csv(out)
    lines = problems.read_text().splitlines()
    assert len(rows) == len(lines) > 20
    checked = 0
    for i, (row, line) in enumerate(zip(rows, lines)):
        if not row["feasible"]:
            continue
        prob = tmp_path / f"p{i}.json"
        prob.write_text(line)
        res = tmp_path / f"r{i}.json"
        assert cli.main(["solve", str(prob), "--out", str(res), "--no-timestamp"]) == 0
        total = json.loads(res.read_text())["total"]
        assert abs(total - row["F_min"]) <= 1e-9 * max(1.0, abs(total))
        checked += 1
    assert checked > 10


def test_translation_keeps_feasible_set(plate):
    offset = np.array([0.12, -0.3, 0.07])
    com = np.array([0.0, 0.02, 0.01])
    base = compute_force_map(plate, com, 0.3, spacing=0.01)
    moved = compute_force_map(plate.translated(offset), com + offset, 0.3, spacing=0.01)
    assert len(base) == len(moved)
    for a, b in zip(base, moved):
        assert b.y == pytest.approx(a.y + offset[1], abs=1e-9)
        assert b.z == pytest.approx(a.z + offset[2], abs=1e-9)
        assert a.feasible == b.feasible
        if a.F_min is not None:
            assert b.F_min == pytest.approx(a.F_min, rel=1e-6)


def test_mass_homogeneity(plate):
    lam = 2.0
    base = compute_force_map(plate, (0.0, 0.0, 0.0), 0.3, spacing=0.01)
    heavy = compute_force_map(plate, (0.0, 0.0, 0.0), 0.3 * lam, spacing=0.01)
    worst = 0.0
    for a, b in zip(base, heavy):
        if a.feasible and b.feasible and a.state is b.state:
            worst = max(worst, abs(b.F_min / (lam * a.F_min) - 1))
    print(f"worst relative departure from linear mass scaling: {worst:.4f}")
    assert worst <= 1e-6


def test_mass_homogeneity_one_finger_entries(plate):
    lam = 2.0
    base = compute_force_map(plate, (0.0, 0.0, 0.0), 0.3, spacing=0.01)
    heavy = compute_force_map(plate, (0.0, 0.0, 0.0), 0.3 * lam, spacing=0.01)
    n = 0
    for a, b in zip(base, heavy):
        if a.F_min is not None and a.state is b.state and a.state is not SlipState.TWO_FINGER:
            assert b.F_min == pytest.approx(lam * a.F_min, rel=1e-9)
            n += 1
    assert n > 5


def test_entries_resolve_from_recorded_problems(plate_map):
    for e in plate_map[::25]:
        cfg, W = config_from_problem(e.problem)
        if e.F_min is not None:
            assert solve_grasp_force(cfg, W).total == e.F_min
        assert cfg.material == DEFAULT_MATERIAL


# export

def test_single_feasible_entry_one_row(tmp_path, plate_map):
    e = next(e for e in plate_map if e.feasible)
    path = export_map([e], tmp_path / "one.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 2
    assert lines[1].split(",")[4] == "1"


def test_infeasible_entry_has_blank_force(tmp_path, plate_map):
    e = next(e for e in plate_map if not e.feasible)
    fields = export_map([e], tmp_path / "bad.csv").read_text().splitlines()[1].split(",")
    assert fields[2] == ""
    assert fields[4] == "0"


def test_csv_round_trip_is_byte_identical(tmp_path, plate_map):
    first = export_map(plate_map, tmp_path / "a.csv")
    second = export_map(read_map_csv(first), tmp_path / "b.csv")
    assert first.read_bytes() == second.read_bytes()


def test_json_mirrors_schema(tmp_path, plate_map):
    doc = json.loads(export_map(plate_map, tmp_path / "m.json").read_text())
    assert doc["columns"] == list(COLUMNS)
    assert len(doc["entries"]) == len(plate_map)
    for row, e in zip(doc["entries"], plate_map):
        assert set(row) == set(COLUMNS)
        assert row["feasible"] == e.feasible
        assert (row["F_min"] is None) == (not e.feasible)


def test_rows_are_row_major(plate_map):
    keys = [(e.y, e.z) for e in plate_map]
    assert keys == sorted(keys)


def test_empty_export_rejected(tmp_path):
    with pytest.raises(ValueError):
        export_map([], tmp_path / "x.csv")
