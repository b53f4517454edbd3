"""Largest safe lift speed for feedback vs predictive force control."""
from dataclasses import replace

from softgrasp.liftsim import ControlMode, ControllerConfig, SimObject, find_max_speed, simulate_lift


def main():
    obj = SimObject(0.4)
    ctl = ControllerConfig(seed=0)
    fb = find_max_speed(obj, ctl)
    pred = find_max_speed(obj, replace(ctl, mode=ControlMode.PREDICTION))
    print("speed mm/s  feedback  prediction")
    for v, a, b in zip(fb.speeds, fb.successes, pred.successes):
        print(f"{v * 1e3:10.1f}  {'ok' if a else 'fail':>8}  {'ok' if b else 'fail':>10}")
    print(f"v_max feedback {fb.v_max * 1e3:.1f} mm/s, prediction {pred.v_max * 1e3:.1f} mm/s")

    fast = 10 * fb.v_max
    for mode in (ControlMode.FEEDBACK, ControlMode.PREDICTION):
        tr = simulate_lift(obj, replace(ctl, mode=mode, lift_speed=fast))
        print(f"{mode.value:>10} at {fast * 1e3:.0f} mm/s: {tr.outcome}, peak force {tr.actual.max():.2f} N")


if __name__ == "__main__":
    main()
