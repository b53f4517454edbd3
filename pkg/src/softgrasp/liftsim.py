"""Reach-lift-hold episodes of a parallel gripper with soft fingertips.

The object rests on the ground while the jaw closes to its first target
force; the arm then lifts at constant speed. Ground support fades linearly
over a small clearance height, so the load carried by the fingers grows from
zero to the full weight. Afterwards the object hangs in the grasp for a short
hold period.

The jaw is a velocity-commanded axis driven by a PID loop on the gripper's
own force reading. The fingertip sensor feeds the required-force estimate and
is sampled through a zero-order hold with latency and bounded uniform noise.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .contact import DEFAULT_MATERIAL, SoftMaterial
from .solver import GraspConfig, SolverError, solve_grasp_force
from .wrench import (
    CenterOfMass,
    RequiredWrench,
    estimate_com,
    gravity_line,
    required_wrench_from_feedback,
    required_wrench_from_gravity,
    rotation_about,
    synthesize_feedback,
)

__all__ = [
    "ControlMode",
    "SimObject",
    "ControllerConfig",
    "EpisodeTrace",
    "SpeedSearch",
    "RegraspResult",
    "simulate_lift",
    "find_max_speed",
    "measure_and_regrasp",
    "predicted_hold_force",
    "DEFAULT_SPEED_GRID",
    "TRACE_COLUMNS",
]

GRAVITY = 9.80665
TRACE_COLUMNS = ("t", "required", "target", "actual", "support", "lifted", "slip", "crush")
DEFAULT_SPEED_GRID = (0.25e-3, 0.5e-3, 1e-3, 2e-3, 4e-3)


class ControlMode(str, enum.Enum):
    PRESET = "preset"
    FEEDBACK = "feedback"
    PREDICTION = "prediction"


def _vec3(v, name):
    a = tuple(float(x) for x in np.asarray(v, dtype=float).reshape(-1))
    if len(a) != 3 or not all(math.isfinite(x) for x in a):
        raise ValueError(f"{name} must be a finite 3-vector")
    return a


@dataclass(frozen=True)
class SimObject:
    """Object and grasp geometry, all in the gripper frame at the grasp.

    com is measured from the midpoint between the two contact centers, which
    sit at -half_width and +half_width along the jaw axis x. Gravity acts
    along -z of the world; the gripper frame coincides with the world unless
    a wrist pose is given. Both contact normals are rotated by ``tilt_deg``
    about z so that they are never exactly parallel to the jaw axis.
    """

    mass: float
    com: tuple = (0.0, 0.0, 0.0)
    mu: float = 0.5
    max_safe_force: float = 50.0
    support: float = 1.0
    half_width: float = 0.02
    tilt_deg: float = 0.5
    material: SoftMaterial = DEFAULT_MATERIAL

    def __post_init__(self):
        object.__setattr__(self, "com", _vec3(self.com, "com"))
        if not self.mass >= 0 or not math.isfinite(self.mass):
            raise ValueError(f"mass must be non-negative, got {self.mass}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.max_safe_force > 0:
            raise ValueError(f"max_safe_force must be positive, got {self.max_safe_force}")
        if not 0.0 <= self.support <= 1.0:
            raise ValueError(f"support fraction must lie in [0, 1], got {self.support}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def weight(self) -> float:
        return self.mass * GRAVITY

    @cached_property
    def grasp_config(self) -> GraspConfig:
        t = math.radians(self.tilt_deg)
        n_A = np.array([math.cos(t), math.sin(t), 0.0])
        return GraspConfig(n_A, -n_A, self.mu, self.mu, self.half_width, self.half_width,
                           self.material)

    def arms(self):
        return (np.array([-self.half_width, 0.0, 0.0]), np.array([self.half_width, 0.0, 0.0]))

    def hold_wrench(self, pose=None) -> RequiredWrench:
        return required_wrench_from_gravity((0.0, 0.0, -self.weight), self.com, pose)


@dataclass(frozen=True)
class ControllerConfig:
    """Gripper controller, sensor and arm settings (SI units).

    PID gains act on the force error in N and command jaw speed in mm/s;
    ``stiffness`` (N/mm) converts jaw travel into grasp force.
    """

    mode: ControlMode = ControlMode.FEEDBACK
    threshold: float = 0.10
    kp: float = 2.0
    ki: float = 0.5
    kd: float = 0.05
    stiffness: float = 10.0
    jaw_speed_max: float = 20.0
    latency: float = 0.2
    sensor_period: float = 1 / 30
    force_noise: float = 0.1
    moment_noise: float = 1e-3
    initial_force: float = 2.0
    lift_speed: float = 1e-3
    clearance: float = 5e-3
    height_resolution: float = 1e-5
    settle_time: float = 0.5
    hold_time: float = 0.5
    seed: int = 0
    predicted_force: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", ControlMode(self.mode))
        checks = {
            "threshold": self.threshold >= 0,
            "latency": self.latency >= 0,
            "sensor_period": self.sensor_period > 0,
            "force_noise": self.force_noise >= 0,
            "moment_noise": self.moment_noise >= 0,
            "initial_force": self.initial_force >= 0,
            "lift_speed": self.lift_speed > 0,
            "clearance": self.clearance > 0,
            "height_resolution": self.height_resolution > 0,
            "stiffness": self.stiffness > 0,
            "jaw_speed_max": self.jaw_speed_max > 0,
            "settle_time": self.settle_time >= 0,
            "hold_time": self.hold_time >= 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"invalid controller settings: {', '.join(bad)}")
        if self.predicted_force is not None and not self.predicted_force >= 0:
            raise ValueError("predicted_force must be non-negative")

    def with_speed(self, speed: float) -> "ControllerConfig":
        return replace(self, lift_speed=float(speed))


@dataclass
class EpisodeTrace:
    """Per-step record of one episode.

    ``support`` is the ground-support fraction; ``finger_load`` the vertical
    load carried by the fingers according to the contact solution, in N.
    """

    t: np.ndarray
    required: np.ndarray
    target: np.ndarray
    actual: np.ndarray
    support: np.ndarray
    finger_load: np.ndarray
    lifted: np.ndarray
    slip: np.ndarray
    crush: np.ndarray
    weight: float
    mode: ControlMode
    lift_speed: float
    predicted_force: float | None = None
    outcome: str = "timeout"
    meta: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    @property
    def slipped(self) -> bool:
        return bool(self.slip.any())

    @property
    def crushed(self) -> bool:
        return bool(self.crush.any())

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.required[i], self.target[i], self.actual[i], self.support[i],
                   int(self.lifted[i]), int(self.slip[i]), int(self.crush[i]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row[:5]] + list(row[5:]))
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path


@lru_cache(maxsize=65536)
def _solve_cached(obj: SimObject, wrench: tuple):
    """(per-finger grasp force, finger vertical load) for a wrench on obj's grasp.

    Returns (inf, nan) when no finite grasp force holds the wrench.
    """
    W = RequiredWrench.from_vector(wrench)
    try:
        sol = solve_grasp_force(obj.grasp_config, W)
    except SolverError:
        return math.inf, math.nan
    vertical = sol.decomposition_A.force[2] + sol.decomposition_B.force[2]
    return max(sol.F_A, sol.F_B), float(vertical)


def _grasp_force(obj: SimObject, W: RequiredWrench) -> float:
    return _solve_cached(obj, tuple(W.vector.tolist()))[0]


def predicted_hold_force(obj: SimObject, pose=None) -> float:
    """Per-finger force the solver predicts for holding ``obj`` off the ground."""
    return _grasp_force(obj, obj.hold_wrench(pose))


def _support_fraction(obj: SimObject, ctl: ControllerConfig, height: float) -> float:
    steps = math.floor(height / ctl.height_resolution + 1e-9)
    return min(obj.support, max(0.0, 1.0 - steps * ctl.height_resolution / ctl.clearance))


class _Sensor:
    """Zero-order-hold fingertip sensor with latency and bounded noise."""

    def __init__(self, obj: SimObject, ctl: ControllerConfig, rng: np.random.Generator):
        self.obj = obj
        self.ctl = ctl
        self.rng = rng
        self.r_A, self.r_B = obj.arms()
        self.history = []
        self.next_sample = 0.0
        self.estimate = 0.0

    def record(self, t, wrench: RequiredWrench, grip: float):
        self.history.append((t, wrench, grip))

    def _delayed(self, t):
        cutoff = t - self.ctl.latency + 1e-12
        idx = 0
        for i in range(len(self.history) - 1, -1, -1):
            if self.history[i][0] <= cutoff:
                idx = i
                break
        return self.history[idx]

    def update(self, t) -> float:
        if t + 1e-12 < self.next_sample:
            return self.estimate
        self.next_sample += self.ctl.sensor_period
        _, wrench, grip = self._delayed(t)
        fb = synthesize_feedback(wrench, grip, self.r_A, self.r_B, rng=self.rng,
                                 force_noise=self.ctl.force_noise,
                                 moment_noise=self.ctl.moment_noise)
        est = _grasp_force(self.obj, required_wrench_from_feedback(fb))
        if math.isfinite(est):
            self.estimate = est
        return self.estimate


def _target(ctl: ControllerConfig, estimate: float, prediction: float | None) -> float:
    gain = 1.0 + ctl.threshold
    if ctl.mode is ControlMode.PRESET:
        return ctl.initial_force
    if ctl.mode is ControlMode.PREDICTION:
        return gain * max(estimate, prediction)
    return max(ctl.initial_force, gain * estimate)


def simulate_lift(obj: SimObject, ctl: ControllerConfig, duration: float | None = None,
                  dt: float = 2e-3) -> EpisodeTrace:
    """Run one episode until success, slip, crush or ``duration`` seconds.

    PREDICTION mode uses ``ctl.predicted_force`` when given, otherwise the
    solver's prediction from the object's true center of mass.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lift_time = ctl.clearance * obj.support / ctl.lift_speed
    if duration is None:
        duration = ctl.settle_time + lift_time + ctl.hold_time + 1.0
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")

    prediction = None
    if ctl.mode is ControlMode.PREDICTION:
        prediction = ctl.predicted_force if ctl.predicted_force is not None else predicted_hold_force(obj)

    hold = obj.hold_wrench()
    rng = np.random.default_rng(ctl.seed)
    sensor = _Sensor(obj, ctl, rng) if ctl.mode is not ControlMode.PRESET else None
    n_steps = int(math.floor(duration / dt + 1e-9)) + 1

    cols = {name: [] for name in ("t", "required", "target", "actual", "support",
                                  "finger_load", "lifted", "slip", "crush")}
    jaw = 0.0
    integral = 0.0
    prev_err = None
    lifted_at = None
    outcome = "timeout"
    for i in range(n_steps):
        t = i * dt
        height = max(0.0, t - ctl.settle_time) * ctl.lift_speed
        s = _support_fraction(obj, ctl, height)
        load = 1.0 - s
        wrench = hold.scaled(load)
        required, vertical = _solve_cached(obj, tuple(wrench.vector.tolist()))
        finger_load = vertical if obj.mass > 0 else 0.0
        actual = ctl.stiffness * max(jaw, 0.0)

        if sensor is not None:
            sensor.record(t, wrench, actual)
            estimate = sensor.update(t)
        else:
            estimate = 0.0
        target = _target(ctl, estimate, prediction)

        slip = actual < required
        crush = actual > obj.max_safe_force
        lifted = s == 0.0
        if lifted and lifted_at is None:
            lifted_at = t
        for name, v in (("t", t), ("required", required), ("target", target),
                        ("actual", actual), ("support", s), ("finger_load", finger_load),
                        ("lifted", lifted), ("slip", slip), ("crush", crush)):
            cols[name].append(v)
        if slip or crush:
            outcome = "slip" if slip else "crush"
            break
        if lifted_at is not None and t - lifted_at >= ctl.hold_time - 1e-12:
            outcome = "success"
            break

        err = target - actual
        deriv = 0.0 if prev_err is None else (err - prev_err) / dt
        prev_err = err
        u = ctl.kp * err + ctl.ki * (integral + err * dt) + ctl.kd * deriv
        if abs(u) < ctl.jaw_speed_max:
            integral += err * dt
        u = max(-ctl.jaw_speed_max, min(ctl.jaw_speed_max, u))
        jaw = max(0.0, jaw + u * dt)

    arr = {k: np.asarray(v) for k, v in cols.items()}
    return EpisodeTrace(arr["t"], arr["required"].astype(float), arr["target"].astype(float),
                        arr["actual"].astype(float), arr["support"].astype(float),
                        arr["finger_load"].astype(float), arr["lifted"].astype(bool),
                        arr["slip"].astype(bool), arr["crush"].astype(bool), obj.weight,
                        ctl.mode, ctl.lift_speed, prediction, outcome,
                        {"dt": dt, "duration": duration})


@dataclass(frozen=True)
class SpeedSearch:
    v_max: float
    speeds: tuple
    successes: tuple
    monotone: bool


def find_max_speed(obj: SimObject, ctl: ControllerConfig, speeds=DEFAULT_SPEED_GRID,
                   dt: float = 2e-3) -> SpeedSearch:
    """Largest grid speed whose episode succeeds (0.0 when none does).

    Every grid speed is run with the same seed. ``monotone`` is False when a
    success occurs above a failure on the grid.
    """
    speeds = tuple(float(v) for v in speeds)
    if not speeds:
        raise ValueError("speed grid is empty")
    if any(b <= a for a, b in zip(speeds, speeds[1:])):
        raise ValueError("speed grid must be strictly increasing")
    ok = tuple(simulate_lift(obj, ctl.with_speed(v), dt=dt).success for v in speeds)
    v_max = max((v for v, good in zip(speeds, ok) if good), default=0.0)
    first_fail = next((i for i, good in enumerate(ok) if not good), len(ok))
    return SpeedSearch(v_max, speeds, ok, not any(ok[first_fail:]))


@dataclass(frozen=True)
class RegraspResult:
    G: np.ndarray
    com: CenterOfMass
    predicted_force: float
    first: EpisodeTrace
    regrasp: EpisodeTrace


def measure_and_regrasp(obj: SimObject, ctl: ControllerConfig, offset=(0.0, 0.02, 0.0), *,
                        wrist_angle_deg: float = 90.0, regrasp_speed: float | None = None,
                        dt: float = 2e-3) -> RegraspResult:
    """Feedback grasp, COM identification from two wrist poses, predictive regrasp.

    The first episode runs in FEEDBACK mode at ``ctl.lift_speed``. Once it
    holds the object, one sensor snapshot is taken at the lifting pose and one
    after rotating the wrist by ``wrist_angle_deg`` about the jaw axis. The
    regrasp moves the grasp midpoint by ``offset`` (gripper frame) and lifts
    in PREDICTION mode at ``regrasp_speed`` (ten times the first speed by
    default) with the force predicted from the estimates.
    """
    first = simulate_lift(obj, replace(ctl, mode=ControlMode.FEEDBACK), dt=dt)
    if not first.success:
        raise RuntimeError(f"first grasp failed ({first.outcome}); nothing to measure")
    grip = float(first.actual[-1])
    rng = np.random.default_rng([ctl.seed, 1])
    r_A, r_B = obj.arms()
    G_world = np.array([0.0, 0.0, -obj.weight])
    lines = []
    poses = (np.eye(3), rotation_about((1.0, 0.0, 0.0), math.radians(wrist_angle_deg)))
    for R in poses:
        W = required_wrench_from_gravity(G_world, R @ np.asarray(obj.com), R)
        fb = synthesize_feedback(W, grip, r_A, r_B, rng=rng, force_noise=ctl.force_noise,
                                 moment_noise=ctl.moment_noise)
        lines.append(gravity_line(fb))
    com = estimate_com(lines)
    G_est = poses[0] @ lines[0].G

    offset = np.asarray(offset, dtype=float)
    moved = replace(obj, com=np.asarray(obj.com) - offset)
    F_pred = _grasp_force(moved, required_wrench_from_gravity(G_est, com.l - offset))
    speed = 10.0 * ctl.lift_speed if regrasp_speed is None else regrasp_speed
    regrasp = simulate_lift(moved, replace(ctl, mode=ControlMode.PREDICTION, lift_speed=speed,
                                           predicted_force=F_pred), dt=dt)
    return RegraspResult(G_est, com, F_pred, first, regrasp)
