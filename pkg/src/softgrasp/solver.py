"""Minimum grasp force and slip-state prediction for a two-finger parallel gripper.

Finger A sits on the -x side of the gripper frame and pushes along +x,
finger B sits on the +x side and pushes along -x. Each contact is described
by its push normal n_i (pointing into the object), a tangential basis
(e_t1, e_t2) and a scalar moment M_i about n_i.

Unknown ordering of the two-finger system::

    X2 = [F_A^n, F_A^t1, F_A^t2, F_B^n, F_B^t1, F_B^t2, M_A, M_B]

The one-finger system drops the slipping finger's moment column.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .contact import DEFAULT_MATERIAL, SoftMaterial, moment_coefficient
from .lm import levenberg_marquardt
from .wrench import RequiredWrench

__all__ = [
    "Finger",
    "SlipState",
    "GraspConfig",
    "ContactDecomposition",
    "GraspSolution",
    "LinearSystem",
    "StickQuantities",
    "OneFingerResult",
    "SolverError",
    "DegenerateBasisError",
    "SingularConfigurationError",
    "InfeasibleGraspError",
    "NonConvergenceError",
    "UngraspableError",
    "tangential_basis",
    "build_two_finger_system",
    "build_one_finger_system",
    "solve_two_finger",
    "solve_one_finger",
    "stick_transition_check",
    "solve_grasp_force",
    "ellipse_residual",
]

EPS_PARALLEL = 1e-8
START_POINTS = ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0))
RESIDUAL_TOL = 1e-8
NO_ROOT_RESIDUAL = 1e-4
# Slack for round-off when filtering nonnegative forces, relative to the solution scale.
SIGN_TOL = 1e-9


class Finger(str, enum.Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Finger":
        return Finger.B if self is Finger.A else Finger.A


class SlipState(str, enum.Enum):
    A_SLIP = "A_SLIP"
    B_SLIP = "B_SLIP"
    TWO_FINGER = "TWO_FINGER"


class SolverError(RuntimeError):
    """Base class for grasp-solver failures."""


class DegenerateBasisError(ValueError):
    """Contact normal is parallel to the grasp axis."""


class SingularConfigurationError(SolverError):
    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class InfeasibleGraspError(SolverError):
    def __init__(self, message, best_residual=math.inf):
        super().__init__(message)
        self.best_residual = best_residual


class NonConvergenceError(SolverError):
    def __init__(self, message, best_residual=math.inf):
        super().__init__(message)
        self.best_residual = best_residual


class UngraspableError(InfeasibleGraspError):
    """No slip-state hypothesis admits an equilibrium."""


def _unit(v, name):
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be a finite 3-vector")
    n = np.linalg.norm(a)
    if not abs(n - 1.0) < 1e-9:
        raise ValueError(f"{name} must be a unit vector (norm {n:.12g})")
    return a / n


def _cross(a, b):
    # np.cross is slow for single 3-vectors
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def tangential_basis(n, e_x=(1.0, 0.0, 0.0), eps: float = EPS_PARALLEL):
    """(e_t1, e_t2) with e_t1 = n x e_x / |n x e_x| and e_t2 = e_t1 x n."""
    n = np.asarray(n, dtype=float)
    c = _cross(n, np.asarray(e_x, dtype=float))
    norm = np.linalg.norm(c)
    if norm <= eps:
        raise DegenerateBasisError(
            f"contact normal {n.tolist()} is parallel to the grasp axis; perturb or reject the pose")
    t1 = c / norm
    return t1, _cross(t1, n)


@dataclass(frozen=True)
class GraspConfig:
    """Contact geometry, friction and fingertip material of one grasp.

    r_A and r_B are either scalar distances along the grasp axis (finger A
    at -r_A * e_x, finger B at +r_B * e_x) or full 3-vectors from the gripper
    origin to each contact center.
    """

    n_A: np.ndarray
    n_B: np.ndarray
    mu_A: float
    mu_B: float
    r_A: object
    r_B: object
    material: SoftMaterial = DEFAULT_MATERIAL
    e_x: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        object.__setattr__(self, "n_A", _unit(self.n_A, "n_A"))
        object.__setattr__(self, "n_B", _unit(self.n_B, "n_B"))
        object.__setattr__(self, "e_x", _unit(self.e_x, "e_x"))
        for name in ("mu_A", "mu_B"):
            mu = float(getattr(self, name))
            if not mu > 0 or not math.isfinite(mu):
                raise ValueError(f"{name} must be positive, got {mu}")
            object.__setattr__(self, name, mu)
        for name in ("r_A", "r_B"):
            r = getattr(self, name)
            if np.ndim(r) == 0:
                r = float(r)
                if not r > 0:
                    raise ValueError(f"scalar arm {name} must be positive, got {r}")
            else:
                r = np.asarray(r, dtype=float).reshape(-1)
                if r.shape != (3,) or not np.all(np.isfinite(r)):
                    raise ValueError(f"{name} must be a scalar or a finite 3-vector")
            object.__setattr__(self, name, r)
        if self.scalar_arms != (np.ndim(self.r_B) == 0):
            raise ValueError("r_A and r_B must both be scalars or both be 3-vectors")

    @property
    def scalar_arms(self) -> bool:
        return np.ndim(self.r_A) == 0

    def arm(self, finger: Finger) -> np.ndarray:
        r = self.r_A if finger is Finger.A else self.r_B
        if np.ndim(r) == 0:
            sign = -1.0 if finger is Finger.A else 1.0
            return sign * r * self.e_x
        return r

    def normal(self, finger: Finger) -> np.ndarray:
        return self.n_A if finger is Finger.A else self.n_B

    def mu(self, finger: Finger) -> float:
        return self.mu_A if finger is Finger.A else self.mu_B

    def basis(self, finger: Finger):
        cache = self.__dict__.setdefault("_bases", {})
        if finger not in cache:
            cache[finger] = tangential_basis(self.normal(finger), self.e_x)
        return cache[finger]

    def mirrored(self) -> "GraspConfig":
        """Swap the roles of A and B by reflecting through the y-z plane.

        Finger A of the result is finger B of ``self`` seen from the other jaw.
        Pair with :func:`mirror_wrench` to transform the load consistently.
        """
        P = np.diag([-1.0, 1.0, 1.0])
        if self.scalar_arms:
            r_A, r_B = self.r_B, self.r_A
        else:
            r_A, r_B = P @ self.r_B, P @ self.r_A
        return GraspConfig(P @ self.n_B, P @ self.n_A, self.mu_B, self.mu_A, r_A, r_B,
                           self.material, P @ self.e_x * -1.0)

    def to_dict(self):
        def arm(r):
            return float(r) if np.ndim(r) == 0 else np.asarray(r).tolist()
        return {
            "n_A": self.n_A.tolist(), "n_B": self.n_B.tolist(),
            "mu_A": self.mu_A, "mu_B": self.mu_B,
            "r_A": arm(self.r_A), "r_B": arm(self.r_B),
            "material": {"c": self.material.c, "gamma": self.material.gamma, "k": self.material.k},
        }


def mirror_wrench(w: RequiredWrench) -> RequiredWrench:
    """Required wrench seen after the reflection used by GraspConfig.mirrored.

    Forces are polar vectors and flip their x-component; moments are axial
    and flip their y and z components.
    """
    return RequiredWrench(w.F_req * np.array([-1.0, 1.0, 1.0]), w.M_req * np.array([1.0, -1.0, -1.0]))


@dataclass(frozen=True)
class ContactDecomposition:
    F_n: float
    F_t1: float
    F_t2: float
    e_t1: np.ndarray
    e_t2: np.ndarray
    M: float
    n: np.ndarray

    @property
    def F_t(self) -> float:
        return math.hypot(self.F_t1, self.F_t2)

    @property
    def force(self) -> np.ndarray:
        return self.F_n * self.n + self.F_t1 * self.e_t1 + self.F_t2 * self.e_t2

    @property
    def moment(self) -> np.ndarray:
        return self.M * self.n

    def to_dict(self):
        return {"F_n": self.F_n, "F_t1": self.F_t1, "F_t2": self.F_t2, "M": self.M,
                "e_t1": self.e_t1.tolist(), "e_t2": self.e_t2.tolist()}


@dataclass(frozen=True)
class GraspSolution:
    F_A: float
    F_B: float
    state: SlipState
    decomposition_A: ContactDecomposition
    decomposition_B: ContactDecomposition
    converged: bool
    iterations: int
    X: np.ndarray
    balance_residual: float
    limit_residual: float = 0.0

    @property
    def total(self) -> float:
        return self.F_A + self.F_B

    def to_dict(self):
        return {
            "F_A": self.F_A, "F_B": self.F_B, "state": self.state.value,
            "decompositions": {"A": self.decomposition_A.to_dict(), "B": self.decomposition_B.to_dict()},
            "iterations": self.iterations, "converged": self.converged,
            "residual": self.balance_residual, "limit_residual": self.limit_residual,
        }


@dataclass(frozen=True)
class LinearSystem:
    G: np.ndarray
    p: np.ndarray
    Z: np.ndarray


@dataclass(frozen=True)
class StickQuantities:
    F_n: float
    F_t: float
    M: float


@dataclass(frozen=True)
class OneFingerResult:
    solution: GraspSolution
    slipping: Finger
    stick: StickQuantities


def _force_columns(cfg: GraspConfig, finger: Finger):
    n = cfg.normal(finger)
    t1, t2 = cfg.basis(finger)
    dirs = (n, t1, t2)
    if cfg.scalar_arms:
        # Scalar moment rows for arms on the grasp axis: A at -r_A e_x, B at +r_B e_x.
        r = cfg.r_A if finger is Finger.A else cfg.r_B
        s = 1.0 if finger is Finger.A else -1.0
        cols = [np.array([d[0], d[1], d[2], 0.0, s * r * d[2], -s * r * d[1]]) for d in dirs]
    else:
        arm = cfg.arm(finger)
        cols = [np.concatenate([d, _cross(arm, d)]) for d in dirs]
    return cols, (t1, t2)


def _grasp_matrix(cfg: GraspConfig, moment_fingers) -> np.ndarray:
    cols_A, _ = _force_columns(cfg, Finger.A)
    cols_B, _ = _force_columns(cfg, Finger.B)
    cols = cols_A + cols_B
    for f in moment_fingers:
        cols.append(np.concatenate([np.zeros(3), cfg.normal(f)]))
    return np.column_stack(cols)


def _particular_and_nullspace(G: np.ndarray, w: np.ndarray) -> LinearSystem:
    U, s, Vt = np.linalg.svd(G)
    tol = max(G.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > max(tol, 1e-12)))
    if rank < G.shape[0]:
        raise SingularConfigurationError(
            f"grasp matrix has rank {rank} < {G.shape[0]}; contact geometry cannot balance a general wrench",
            rank=rank)
    p = Vt[:rank].T @ ((U.T @ w)[:rank] / s[:rank])
    Z = Vt[rank:].T.copy()
    # Fix the sign of each null vector so results do not depend on LAPACK conventions.
    for j in range(Z.shape[1]):
        k = int(np.argmax(np.abs(Z[:, j]) > 1e-12))
        if Z[k, j] < 0:
            Z[:, j] = -Z[:, j]
    return LinearSystem(G, p, Z)


def _squeeze_functional(cfg: GraspConfig, n_unknowns: int) -> np.ndarray:
    """Row vector a with a @ X = F_A + F_B."""
    a = np.zeros(n_unknowns)
    for f, off, sign in ((Finger.A, 0, 1.0), (Finger.B, 3, -1.0)):
        t1, t2 = cfg.basis(f)
        a[off:off + 3] = sign * np.array([cfg.normal(f) @ cfg.e_x, t1 @ cfg.e_x, t2 @ cfg.e_x])
    return a


def build_two_finger_system(cfg: GraspConfig, W_req: RequiredWrench) -> LinearSystem:
    """G2 (6x8), minimal-norm particular solution p2 and orthonormal nullspace Z2 (8x2).

    The nullspace basis is rotated so that its first column is the pure
    squeeze (the null direction that raises F_A + F_B fastest) and the
    second column leaves the total grasp force unchanged.
    """
    G = _grasp_matrix(cfg, (Finger.A, Finger.B))
    system = _particular_and_nullspace(G, W_req.vector)
    Z = system.Z
    a = _squeeze_functional(cfg, 8) @ Z
    norm = np.linalg.norm(a)
    if norm > 1e-12:
        u = a / norm
        v = np.array([-u[1], u[0]])
        Z = np.column_stack([Z @ u, Z @ v])
        if Z[6, 1] < 0:
            Z[:, 1] = -Z[:, 1]
        system = LinearSystem(G, system.p, Z)
    return system


def build_one_finger_system(cfg: GraspConfig, W_req: RequiredWrench, slipping: Finger) -> LinearSystem:
    """G1 (6x7) with the slipping finger's moment pinned to zero; Z1 is 7x1."""
    slipping = Finger(slipping)
    G = _grasp_matrix(cfg, (slipping.other,))
    return _particular_and_nullspace(G, W_req.vector)


def _moment_scale(cfg: GraspConfig, finger: Finger) -> float:
    """M_max / |F_n|**(1 + gamma) for the finger's material and friction."""
    mat = cfg.material
    return cfg.mu(finger) * moment_coefficient(mat.k) * mat.c


def ellipse_residual(F_n: float, F_t: float, M: float, mu: float, mat: SoftMaterial) -> float:
    """Elliptic limit-surface residual with the power-law spin moment."""
    if F_n <= 0:
        return math.inf if (F_t != 0 or M != 0 or F_n < 0) else 0.0
    m_max = mu * moment_coefficient(mat.k) * mat.c * F_n ** (1.0 + mat.gamma)
    return (F_t / (mu * F_n)) ** 2 + (M / m_max) ** 2 - 1.0


def _grasp_forces(cfg: GraspConfig, X: np.ndarray):
    fA = X[0] * cfg.n_A + X[1] * cfg.basis(Finger.A)[0] + X[2] * cfg.basis(Finger.A)[1]
    fB = X[3] * cfg.n_B + X[4] * cfg.basis(Finger.B)[0] + X[5] * cfg.basis(Finger.B)[1]
    return float(cfg.e_x @ fA), float(-(cfg.e_x @ fB))


def _decompositions(cfg: GraspConfig, X: np.ndarray, M_A: float, M_B: float):
    tA = cfg.basis(Finger.A)
    tB = cfg.basis(Finger.B)
    dA = ContactDecomposition(float(X[0]), float(X[1]), float(X[2]), tA[0], tA[1], float(M_A), cfg.n_A)
    dB = ContactDecomposition(float(X[3]), float(X[4]), float(X[5]), tB[0], tB[1], float(M_B), cfg.n_B)
    return dA, dB


def _zero_solution(cfg: GraspConfig, state: SlipState, n_unknowns: int) -> GraspSolution:
    X = np.zeros(n_unknowns)
    dA, dB = _decompositions(cfg, X, 0.0, 0.0)
    return GraspSolution(0.0, 0.0, state, dA, dB, True, 0, X, 0.0, 0.0)


def _two_finger_residuals(cfg: GraspConfig, system: LinearSystem):
    p, Z = system.p, system.Z
    gam = cfg.material.gamma
    consts = []
    for f, off in ((Finger.A, 0), (Finger.B, 3)):
        consts.append((off, 6 if f is Finger.A else 7, cfg.mu(f), _moment_scale(cfg, f)))

    def fun(q):
        X = p + Z @ q
        out = np.empty(2)
        for i, (o, m, mu, ms) in enumerate(consts):
            fn = X[o]
            afn = abs(fn)
            ft2 = X[o + 1] ** 2 + X[o + 2] ** 2
            out[i] = ft2 / (mu * fn) ** 2 + X[m] ** 2 / (ms * ms * afn ** (2.0 + 2.0 * gam)) - 1.0
        return out

    def jac(q):
        X = p + Z @ q
        J = np.zeros((2, Z.shape[0]))
        for i, (o, m, mu, ms) in enumerate(consts):
            fn = X[o]
            afn = abs(fn)
            ft2 = X[o + 1] ** 2 + X[o + 2] ** 2
            mm = X[m] ** 2 / (ms * ms * afn ** (2.0 + 2.0 * gam))
            J[i, o] = -2.0 * ft2 / (mu * mu * fn**3) - (2.0 + 2.0 * gam) * mm / fn
            J[i, o + 1] = 2.0 * X[o + 1] / (mu * fn) ** 2
            J[i, o + 2] = 2.0 * X[o + 2] / (mu * fn) ** 2
            J[i, m] = 2.0 * X[m] / (ms * ms * afn ** (2.0 + 2.0 * gam))
        return J @ Z

    return fun, jac


def _characteristic_force(cfg: GraspConfig, W_req: RequiredWrench) -> float:
    """Order of magnitude of the normal force needed to carry W_req."""
    mat = cfg.material
    mu = min(cfg.mu_A, cfg.mu_B)
    f_force = np.linalg.norm(W_req.F_req) / (2.0 * mu)
    m_unit = mu * moment_coefficient(mat.k) * mat.c
    f_moment = (np.linalg.norm(W_req.M_req) / (2.0 * m_unit)) ** (1.0 / (1.0 + mat.gamma))
    return max(f_force, f_moment, 1e-12)


def _nullspace_scales(cfg: GraspConfig, W_req: RequiredWrench, Z: np.ndarray) -> np.ndarray:
    """Per-column scales making one unit of each null coordinate comparable.

    Force entries are measured in units of the characteristic normal force
    F0 and moment entries in units of its spin moment M0, so a unit step of
    either coordinate moves the limit-surface residuals by O(1).
    """
    F0 = _characteristic_force(cfg, W_req)
    mat = cfg.material
    M0 = min(cfg.mu_A, cfg.mu_B) * moment_coefficient(mat.k) * mat.c * F0 ** (1.0 + mat.gamma)
    weights = np.r_[np.full(6, 1.0 / F0), np.full(Z.shape[0] - 6, 1.0 / M0)]
    return 1.0 / np.linalg.norm(weights[:, None] * Z, axis=0)


def _balance_residual(system: LinearSystem, X: np.ndarray, W: np.ndarray) -> float:
    return float(np.linalg.norm(system.G @ X - W))


def _admissible(cfg: GraspConfig, X: np.ndarray, scale: float):
    """Grasp forces when both fingers push (nonnegative normals and grasp forces)."""
    tol = SIGN_TOL * scale
    if X[0] < -tol or X[3] < -tol:
        return None
    F_A, F_B = _grasp_forces(cfg, X)
    if F_A < -tol or F_B < -tol:
        return None
    return max(F_A, 0.0), max(F_B, 0.0)


def _pick(candidates):
    """Smallest F_A + F_B, ties broken by smallest F_A; first found wins exact ties."""
    best = None
    for cand in candidates:
        key = (cand[0] + cand[1], cand[0])
        if best is None or key < (best[0] + best[1], best[0]):
            best = cand
    return best


def solve_two_finger(cfg: GraspConfig, W_req: RequiredWrench, *, starts=START_POINTS,
                     extra_starts=(), tol: float = RESIDUAL_TOL) -> GraspSolution:
    """Both fingers on their elliptic limit surfaces (damped least squares, multi-start).

    ``extra_starts`` are full 8-vectors X2 (for instance one-finger solutions
    with the slipping moment set to zero) projected onto the nullspace and
    tried after ``starts``.
    """
    system = build_two_finger_system(cfg, W_req)
    W = W_req.vector
    if W_req.is_zero():
        return _zero_solution(cfg, SlipState.TWO_FINGER, 8)
    fun, jac = _two_finger_residuals(cfg, system)
    D = _nullspace_scales(cfg, W_req, system.Z)

    def fun_s(qs):
        return fun(D * qs)

    def jac_s(qs):
        return jac(D * qs) * D

    scale = max(1.0, float(np.linalg.norm(system.p)))
    q_starts = [np.asarray(q0, dtype=float) for q0 in starts]
    q_starts += [system.Z.T @ (np.asarray(X, dtype=float) - system.p) / D for X in extra_starts]
    candidates = []
    best_res = math.inf
    any_converged = False
    total_iter = 0
    for q0 in q_starts:
        res = levenberg_marquardt(fun_s, jac_s, q0)
        total_iter += res.iterations
        if not np.all(np.isfinite(res.fun)):
            continue
        r = float(np.max(np.abs(res.fun)))
        best_res = min(best_res, r)
        if r >= tol:
            continue
        any_converged = True
        X = system.p + system.Z @ (D * res.x)
        forces = _admissible(cfg, X, scale)
        if forces is None:
            continue
        candidates.append((forces[0], forces[1], X, r, res.iterations))
    if not any_converged:
        raise NonConvergenceError(
            f"two-finger limit-surface system did not converge from any start (best residual {best_res:.3g})",
            best_residual=best_res)
    best = _pick(candidates)
    if best is None:
        raise InfeasibleGraspError("every converged two-finger solution pulls on the object",
                                   best_residual=best_res)
    F_A, F_B, X, r, _ = best
    dA, dB = _decompositions(cfg, X, X[6], X[7])
    return GraspSolution(F_A, F_B, SlipState.TWO_FINGER, dA, dB, True, total_iter, X,
                         _balance_residual(system, X, W), r)


def solve_one_finger(cfg: GraspConfig, W_req: RequiredWrench, slipping: Finger) -> OneFingerResult:
    """The slipping finger sits on its Coulomb cone with zero moment; closed-form root."""
    slipping = Finger(slipping)
    state = SlipState.A_SLIP if slipping is Finger.A else SlipState.B_SLIP
    system = build_one_finger_system(cfg, W_req, slipping)
    W = W_req.vector
    if W_req.is_zero():
        sol = _zero_solution(cfg, state, 7)
        return OneFingerResult(sol, slipping, StickQuantities(0.0, 0.0, 0.0))
    p, z = system.p, system.Z[:, 0]
    o = 0 if slipping is Finger.A else 3
    mu = cfg.mu(slipping)
    # |F_t(q)|^2 - mu^2 F_n(q)^2 = a q^2 + b q + c
    pt, zt = p[o + 1:o + 3], z[o + 1:o + 3]
    a = zt @ zt - mu * mu * z[o] ** 2
    b = 2.0 * (pt @ zt - mu * mu * p[o] * z[o])
    c = pt @ pt - mu * mu * p[o] ** 2
    roots = _real_roots(a, b, c)
    if roots is None:
        raise InfeasibleGraspError(f"no real one-finger equilibrium with finger {slipping.value} slipping")
    scale = max(1.0, float(np.linalg.norm(p)))
    candidates = []
    for q in roots:
        X = p + z * q
        forces = _admissible(cfg, X, scale)
        if forces is not None:
            candidates.append((forces[0], forces[1], X, q, 0))
    best = _pick(candidates)
    if best is None:
        raise InfeasibleGraspError(
            f"one-finger roots with finger {slipping.value} slipping need a pulling contact")
    F_A, F_B, X, _, _ = best
    M_stick = float(X[6])
    M_A, M_B = (0.0, M_stick) if slipping is Finger.A else (M_stick, 0.0)
    dA, dB = _decompositions(cfg, X, M_A, M_B)
    stick_d = dB if slipping is Finger.A else dA
    stick = StickQuantities(stick_d.F_n, stick_d.F_t, abs(M_stick))
    slip_d = dA if slipping is Finger.A else dB
    coulomb = abs(slip_d.F_t - mu * slip_d.F_n) / max(mu * slip_d.F_n, 1e-300)
    sol = GraspSolution(F_A, F_B, state, dA, dB, True, 0, X,
                        _balance_residual(system, X, W), coulomb)
    return OneFingerResult(sol, slipping, stick)


def _real_roots(a, b, c):
    """Real roots of a q^2 + b q + c, ordered ascending; None when there are none."""
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0:
        return (0.0,)
    a, b, c = a / scale, b / scale, c / scale
    if abs(a) < 1e-14:
        if abs(b) < 1e-14:
            return None
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    if disc < 0:
        if disc > -1e-14 * max(b * b, abs(4 * a * c)):
            disc = 0.0
        else:
            return None
    sq = math.sqrt(disc)
    # Numerically stable pair.
    qv = -0.5 * (b + math.copysign(sq, b))
    if qv == 0:
        return (0.0,)
    r1, r2 = qv / a, c / qv
    return tuple(sorted({r1, r2}))


def _embed_one_finger(result: OneFingerResult) -> np.ndarray:
    """Two-finger unknown vector of a one-finger solution (slipping moment zero)."""
    X = result.solution.X
    M_A, M_B = (0.0, X[6]) if result.slipping is Finger.A else (X[6], 0.0)
    return np.concatenate([X[:6], [M_A, M_B]])


def stick_transition_check(stick: StickQuantities, mu: float, mat: SoftMaterial = DEFAULT_MATERIAL) -> bool:
    """True when the stick finger leaves its limit surface (strictly beyond it)."""
    if stick.F_n <= 0:
        return True
    return ellipse_residual(stick.F_n, stick.F_t, stick.M, mu, mat) > 0.0


def solve_grasp_force(cfg: GraspConfig, W_req: RequiredWrench) -> GraspSolution:
    """Slip state and minimum grasp forces for a required wrench."""
    if W_req.is_zero():
        return _zero_solution(cfg, SlipState.A_SLIP, 7)
    hypotheses = []
    for finger in (Finger.A, Finger.B):
        try:
            hypotheses.append(solve_one_finger(cfg, W_req, finger))
        except InfeasibleGraspError:
            continue
    chosen = None
    for h in hypotheses:
        if chosen is None or h.solution.total > chosen.solution.total:
            chosen = h
    if chosen is not None:
        stick_finger = chosen.slipping.other
        if not stick_transition_check(chosen.stick, cfg.mu(stick_finger), cfg.material):
            return chosen.solution
    seeds = [_embed_one_finger(h) for h in hypotheses]
    try:
        return solve_two_finger(cfg, W_req, extra_starts=seeds)
    except InfeasibleGraspError as exc:
        raise UngraspableError(f"wrench cannot be held in any slip state: {exc}",
                               best_residual=exc.best_residual) from exc
    except NonConvergenceError as exc:
        # A best residual far from zero means the two-finger system has no root,
        # so nothing holds the wrench; a nearly-converged run is a numeric failure.
        if hypotheses and exc.best_residual < NO_ROOT_RESIDUAL:
            raise
        raise UngraspableError(f"wrench cannot be held in any slip state: {exc}",
                               best_residual=exc.best_residual) from exc
