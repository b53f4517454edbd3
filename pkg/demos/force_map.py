"""Grasp-force map over the bundled plate, printed as a coarse text heat map."""
import argparse
from importlib import resources

from softgrasp.forcemap import compute_force_map, export_map
from softgrasp.mesh import load_mesh


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=0.3, help="kg")
    ap.add_argument("--com-y", type=float, default=0.0, help="m")
    ap.add_argument("--spacing", type=float, default=0.01, help="m")
    ap.add_argument("--out", help="optional CSV export")
    args = ap.parse_args()

    plate = load_mesh(resources.files("softgrasp") / "data" / "plate.obj")
    entries = compute_force_map(plate, (0.0, args.com_y, 0.0), args.mass, spacing=args.spacing)
    ys = sorted({e.y for e in entries})
    zs = sorted({e.z for e in entries}, reverse=True)
    grid = {(e.y, e.z): e for e in entries}
    print(f"{len(entries)} grasp points, F_min in N ('--' = infeasible)")
    for z in zs:
        cells = []
        for y in ys:
            e = grid.get((y, z))
            cells.append("     " if e is None else ("   --" if not e.feasible else f"{e.F_min:5.1f}"))
        print(f"z={z * 1e3:+6.1f}mm " + "".join(cells))
    best = min((e for e in entries if e.feasible), key=lambda e: (round(e.F_min, 9), abs(e.y) + abs(e.z)))
    print(f"minimum {best.F_min:.3f} N at y={best.y * 1e3:.1f} mm, z={best.z * 1e3:.1f} mm ({best.state.value})")
    if args.out:
        print("wrote", export_map(entries, args.out))


if __name__ == "__main__":
    main()
