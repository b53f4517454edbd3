"""Required-wrench estimation and gravity / center-of-mass identification.

Forces and moments are expressed in the gripper frame. Sensor frames are
taken parallel to the gripper frame, so feedback vectors enter unrotated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WrenchFeedback",
    "RequiredWrench",
    "GravityEstimate",
    "CenterOfMass",
    "EstimationError",
    "required_wrench_from_feedback",
    "required_wrench_from_gravity",
    "measure_gravity",
    "gravity_line",
    "estimate_com",
    "synthesize_feedback",
    "rotation_about",
]


class EstimationError(ValueError):
    """Feedback does not determine the requested quantity."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


def _vec3(v, name):
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass(frozen=True)
class WrenchFeedback:
    """One snapshot of both fingertip sensors.

    F_A/F_B are contact forces on the object, M_A/M_B contact moments about
    each patch center, r_A/r_B the patch centers relative to the gripper origin.
    """

    F_A: np.ndarray
    M_A: np.ndarray
    F_B: np.ndarray
    M_B: np.ndarray
    r_A: np.ndarray
    r_B: np.ndarray

    def __post_init__(self):
        for name in ("F_A", "M_A", "F_B", "M_B", "r_A", "r_B"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        if np.array_equal(self.r_A, self.r_B):
            raise ValueError("contact centers r_A and r_B must differ")

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("F_A", "M_A", "F_B", "M_B", "r_A", "r_B")})

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("F_A", "M_A", "F_B", "M_B", "r_A", "r_B")}

    def scaled(self, factor: float) -> "WrenchFeedback":
        """Forces and moments multiplied by ``factor``; arms unchanged."""
        return WrenchFeedback(self.F_A * factor, self.M_A * factor, self.F_B * factor,
                              self.M_B * factor, self.r_A, self.r_B)


@dataclass(frozen=True)
class RequiredWrench:
    F_req: np.ndarray
    M_req: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "F_req", _vec3(self.F_req, "F_req"))
        object.__setattr__(self, "M_req", _vec3(self.M_req, "M_req"))

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.F_req, self.M_req])

    @classmethod
    def from_vector(cls, w):
        w = np.asarray(w, dtype=float).reshape(6)
        return cls(w[:3], w[3:])

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3))

    def scaled(self, factor: float) -> "RequiredWrench":
        return RequiredWrench(self.F_req * factor, self.M_req * factor)

    def is_zero(self) -> bool:
        return not np.any(self.vector)


@dataclass(frozen=True)
class GravityEstimate:
    """Gravity vector and the line {line_point + t * G} containing the COM."""

    G: np.ndarray
    line_point: np.ndarray
    line_dir: np.ndarray

    def distance_to(self, point) -> float:
        d = np.asarray(point, dtype=float) - self.line_point
        return float(np.linalg.norm(d - (d @ self.line_dir) * self.line_dir))


@dataclass(frozen=True)
class CenterOfMass:
    l: np.ndarray
    residual: float = 0.0


def required_wrench_from_feedback(fb: WrenchFeedback) -> RequiredWrench:
    """Wrench the fingers currently supply, which balances all external loads."""
    F = fb.F_A + fb.F_B
    M = fb.M_A + fb.M_B + np.cross(fb.r_A, fb.F_A) + np.cross(fb.r_B, fb.F_B)
    return RequiredWrench(F, M)


def _check_rotation(pose):
    R = np.asarray(pose, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"pose must be a 3x3 rotation, got shape {R.shape}")
    if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or not np.isclose(np.linalg.det(R), 1.0, atol=1e-9):
        raise ValueError("pose is not a proper rotation matrix")
    return R


def required_wrench_from_gravity(G, com, pose=None) -> RequiredWrench:
    """Predicted required wrench of an object hanging in the grasp.

    Args:
        G: gravity force on the object, world frame.
        com: center of mass relative to the gripper origin, world frame
            (a 3-vector or CenterOfMass).
        pose: rotation of the gripper frame w.r.t. the world (columns are the
            gripper axes). Identity when omitted.
    """
    R = np.eye(3) if pose is None else _check_rotation(pose)
    l_world = com.l if isinstance(com, CenterOfMass) else com
    G_g = R.T @ _vec3(G, "G")
    l_g = R.T @ _vec3(l_world, "com")
    return RequiredWrench(-G_g, -np.cross(l_g, G_g))


def measure_gravity(fb: WrenchFeedback) -> np.ndarray:
    """Gravity of a held object (hold phase only): minus the summed contact forces."""
    return -(fb.F_A + fb.F_B)


def gravity_line(fb: WrenchFeedback, *, rel_tol: float = 1e-12) -> GravityEstimate:
    """Line of candidate COM positions consistent with one hold-phase snapshot."""
    G = measure_gravity(fb)
    g_norm = np.linalg.norm(G)
    if g_norm == 0:
        raise EstimationError("zero measured gravity: feedback does not define a gravity line")
    M_r = -(fb.M_A + fb.M_B + np.cross(fb.r_A, fb.F_A) + np.cross(fb.r_B, fb.F_B))
    m_norm = np.linalg.norm(M_r)
    direction = G / g_norm
    if m_norm == 0:
        return GravityEstimate(G, np.zeros(3), direction)
    GxM = np.cross(G, M_r)
    gxm_norm = np.linalg.norm(GxM)
    if gxm_norm <= rel_tol * g_norm * m_norm:
        raise EstimationError("resultant moment is parallel to gravity; gravity alone cannot produce it")
    l0 = (m_norm / g_norm) * GxM / gxm_norm
    return GravityEstimate(G, l0, direction)


def estimate_com(lines, angle_min_deg: float = 5.0) -> CenterOfMass:
    """Least-squares point closest to all gravity lines.

    Raises EstimationError when every pair of lines is within ``angle_min_deg``
    of parallel.
    """
    lines = list(lines)
    if len(lines) < 2:
        raise EstimationError("need at least two gravity lines")
    dirs = np.array([ln.line_dir for ln in lines])
    pts = np.array([ln.line_point for ln in lines])
    cosines = np.abs(np.clip(dirs @ dirs.T, -1.0, 1.0))
    np.fill_diagonal(cosines, 1.0)
    widest = math.degrees(math.acos(cosines.min()))
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for d, p in zip(dirs, pts):
        P = np.eye(3) - np.outer(d, d)
        A += P
        b += P @ p
    cond = np.linalg.cond(A)
    if widest < angle_min_deg:
        raise EstimationError(
            f"gravity lines are near-parallel (widest pair {widest:.3g} deg < {angle_min_deg:g} deg)",
            condition=cond)
    l = np.linalg.solve(A, b)
    dist = np.array([ln.distance_to(l) for ln in lines])
    return CenterOfMass(l, float(np.sqrt(np.mean(dist**2))))


def rotation_about(axis, angle_rad: float) -> np.ndarray:
    """Rodrigues rotation matrix."""
    a = _vec3(axis, "axis")
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle_rad) * K + (1 - math.cos(angle_rad)) * (K @ K)


def synthesize_feedback(wrench: RequiredWrench, grasp_force: float, r_A, r_B,
                        squeeze_dir=(1.0, 0.0, 0.0), rng=None,
                        force_noise: float = 0.0, moment_noise: float = 0.0) -> WrenchFeedback:
    """Forward sensor model: contact wrenches that supply ``wrench``.

    The load is split evenly between the fingers, ``grasp_force`` is added as
    an internal squeeze along ``squeeze_dir`` (finger A pushes along it), and
    the contact moments absorb whatever the forces leave unbalanced. Optional
    uniform noise bounded by ``force_noise`` (N) and ``moment_noise`` (N*m)
    is added per component.
    """
    r_A = _vec3(r_A, "r_A")
    r_B = _vec3(r_B, "r_B")
    e = _vec3(squeeze_dir, "squeeze_dir")
    e = e / np.linalg.norm(e)
    F_A = 0.5 * wrench.F_req + grasp_force * e
    F_B = 0.5 * wrench.F_req - grasp_force * e
    M_rest = wrench.M_req - np.cross(r_A, F_A) - np.cross(r_B, F_B)
    M_A = 0.5 * M_rest
    M_B = 0.5 * M_rest
    if rng is not None and (force_noise > 0 or moment_noise > 0):
        F_A = F_A + rng.uniform(-force_noise, force_noise, 3)
        F_B = F_B + rng.uniform(-force_noise, force_noise, 3)
        M_A = M_A + rng.uniform(-moment_noise, moment_noise, 3)
        M_B = M_B + rng.uniform(-moment_noise, moment_noise, 3)
    return WrenchFeedback(F_A, M_A, F_B, M_B, r_A, r_B)
