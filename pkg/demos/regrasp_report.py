"""Monte-Carlo report: feedback grasp, COM estimate, predictive regrasp at 10x speed."""
import argparse

import numpy as np

from softgrasp.liftsim import ControllerConfig, SimObject, measure_and_regrasp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--speed", type=float, default=5e-4, help="first-grasp lift speed, m/s")
    args = ap.parse_args()

    obj = SimObject(0.4, com=(0.0, 0.0, -0.01))
    ok, errors, forces = 0, [], []
    for seed in range(args.seeds):
        try:
            res = measure_and_regrasp(obj, ControllerConfig(lift_speed=args.speed, seed=seed))
        except RuntimeError as exc:
            print(f"seed {seed}: {exc}")
            continue
        errors.append(np.linalg.norm(res.com.l - obj.com))
        forces.append(res.predicted_force)
        ok += res.regrasp.success
    n = len(errors)
    print(f"regrasp success {ok}/{args.seeds}")
    if n:
        print(f"COM error median {np.median(errors) * 1e3:.2f} mm, max {max(errors) * 1e3:.2f} mm")
        print(f"predicted force {np.mean(forces):.2f} +- {np.std(forces):.2f} N")


if __name__ == "__main__":
    main()
