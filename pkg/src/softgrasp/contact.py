"""Soft-fingertip contact mechanics.

Power-law contact radius, axisymmetric pressure profile, and the friction
integrals over a circular patch that slides about a center of rotation (COR).
The pair (F_t, M_n) swept over COR distances traces the limit surface, which
the grasp solver approximates by an ellipse.

All quantities are SI (N, m, N*m).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.integrate import cubature
from scipy.special import beta, gamma as gamma_fn

__all__ = [
    "SoftMaterial",
    "ContactPatch",
    "LimitSurfacePoint",
    "TorqueCurve",
    "QuadratureError",
    "DEFAULT_MATERIAL",
    "contact_radius",
    "pressure_normalizer",
    "pressure_at",
    "friction_integrals",
    "max_moment",
    "moment_coefficient",
    "limit_surface_residual",
    "limit_surface_locus",
    "torque_curve",
    "write_curve_csv",
]

# Radius of the disk excised around the COR, as a fraction of R.
COR_EXCISION = 1e-6


class QuadratureError(ArithmeticError):
    """Adaptive cubature did not reach the requested tolerance."""

    def __init__(self, message, *, status=None, error=None, subdivisions=None):
        super().__init__(message)
        self.status = status
        self.error = error
        self.subdivisions = subdivisions


@dataclass(frozen=True)
class SoftMaterial:
    """Fingertip material parameters.

    c is the power-law coefficient (m / N**gamma), gamma the power-law
    exponent and k the pressure-profile shape coefficient.
    """

    c: float = 2.07e-3
    gamma: float = 0.259
    k: float = 2.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"contact coefficient c must be positive, got {self.c}")
        if not 0.0 <= self.gamma <= 1.0 / 3.0:
            raise ValueError(f"power-law exponent must lie in [0, 1/3], got {self.gamma}")
        if not self.k >= 1.0:
            raise ValueError(f"pressure shape coefficient k must be >= 1, got {self.k}")


# Silicone fingertip used throughout the examples: 2.07 mm contact radius at 1 N.
DEFAULT_MATERIAL = SoftMaterial()


@dataclass(frozen=True)
class ContactPatch:
    radius: float
    normal_force: float
    mu: float

    def __post_init__(self):
        if self.normal_force < 0:
            raise ValueError("normal force must be non-negative")
        if self.normal_force > 0 and not self.radius > 0:
            raise ValueError("a loaded patch needs a positive radius")
        if not self.mu > 0:
            raise ValueError("friction coefficient must be positive")

    @classmethod
    def from_force(cls, normal_force: float, mu: float, mat: SoftMaterial = DEFAULT_MATERIAL):
        return cls(contact_radius(normal_force, mat), float(normal_force), float(mu))


@dataclass(frozen=True)
class LimitSurfacePoint:
    F_t: float
    M_n: float
    d_c: float


def contact_radius(F_n: float, mat: SoftMaterial = DEFAULT_MATERIAL) -> float:
    """Patch radius R = c * F_n**gamma."""
    if F_n < 0:
        raise ValueError(f"normal force must be non-negative, got {F_n}")
    if F_n == 0:
        return 0.0
    return mat.c * F_n**mat.gamma


def pressure_normalizer(k: float) -> float:
    """C_k such that the pressure profile integrates to F_n over the disk."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return 1.5 * k * gamma_fn(3.0 / k) / (gamma_fn(1.0 / k) * gamma_fn(2.0 / k))


def pressure_at(r: float, patch: ContactPatch, mat: SoftMaterial = DEFAULT_MATERIAL) -> float:
    R = patch.radius
    if r < 0 or r > R * (1 + 1e-12):
        raise ValueError(f"r={r} outside the contact patch [0, {R}]")
    if R == 0:
        return 0.0
    k = mat.k
    s = min(r / R, 1.0)
    return pressure_normalizer(k) * patch.normal_force / (math.pi * R * R) * (1.0 - s**k) ** (1.0 / k)


@lru_cache(maxsize=64)
def moment_coefficient(k: float) -> float:
    """M_max / (mu * F_n * R) in closed form.

    Pure spin integrates mu * r * P(r) over the disk, which reduces to a Beta
    function of the profile exponent.
    """
    return 2.0 * pressure_normalizer(k) * beta(3.0 / k, 1.0 + 1.0 / k) / k


def _normalized_integrand(s: float, k: float):
    """Vectorized integrand over (u, theta) on the unit disk, COR at distance s.

    The radial coordinate uses a = 1 - (1 - u)**2, which removes the square-root
    edge of the pressure profile at a = 1. Only theta in [0, pi] is covered;
    the factor 2 accounts for the mirrored half.
    """
    ck2 = 2.0 * pressure_normalizer(k) / math.pi
    inv_k = 1.0 / k

    def f(x):
        u = x[:, 0]
        th = x[:, 1]
        v = 1.0 - u
        a = 1.0 - v * v
        cos_t = np.cos(th)
        dist = np.sqrt(np.maximum(a * a + s * s - 2.0 * a * s * cos_t, 0.0))
        keep = dist > COR_EXCISION
        dist = np.where(keep, dist, 1.0)
        weight = ck2 * np.maximum(1.0 - a**k, 0.0) ** inv_k * a * 2.0 * v
        weight = np.where(keep, weight / dist, 0.0)
        out = np.empty((a.size, 2))
        out[:, 0] = weight * (s - a * cos_t)
        out[:, 1] = weight * (a * a - a * s * cos_t)
        return out

    return f


def _panels(s: float):
    """u-intervals of the integration domain, split where the COR crosses."""
    if 0.0 < s < 1.0:
        u_c = 1.0 - math.sqrt(1.0 - s)
        return [(0.0, u_c), (u_c, 1.0)]
    return [(0.0, 1.0)]


def _normalized_adaptive(s, k, atol, rtol):
    f = _normalized_integrand(s, k)
    total = np.zeros(2)
    for u0, u1 in _panels(s):
        res = cubature(f, [u0, 0.0], [u1, math.pi], rule="gk21", atol=atol, rtol=rtol,
                       max_subdivisions=20000)
        if res.status != "converged":
            raise QuadratureError(
                f"friction integrals did not converge at d_c/R={s:g} (k={k:g}): "
                f"error estimate {res.error}, {res.subdivisions} subdivisions",
                status=res.status, error=res.error, subdivisions=res.subdivisions)
        total += res.estimate
    return total


def _normalized_grid(s, k, n):
    """Fixed tensor Gauss-Legendre rule, n nodes per direction and panel."""
    f = _normalized_integrand(s, k)
    x, w = np.polynomial.legendre.leggauss(n)
    total = np.zeros(2)
    th = 0.5 * math.pi * (x + 1.0)
    wt = 0.5 * math.pi * w
    for u0, u1 in _panels(s):
        u = 0.5 * (u1 - u0) * (x + 1.0) + u0
        wu = 0.5 * (u1 - u0) * w
        U, T = np.meshgrid(u, th, indexing="ij")
        vals = f(np.column_stack([U.ravel(), T.ravel()]))
        total += np.outer(wu, wt).ravel() @ vals
    return total


def friction_integrals(d_c: float, patch: ContactPatch, mat: SoftMaterial = DEFAULT_MATERIAL,
                       *, method: str = "adaptive", atol: float = 1e-8, rtol: float = 1e-6,
                       n: int = 64) -> LimitSurfacePoint:
    """Resultant tangential force and normal moment for a COR at distance d_c.

    Args:
        d_c: distance from patch center to the COR (may exceed R).
        patch: loaded contact patch.
        mat: material; only the pressure shape k enters here.
        method: "adaptive" (2D adaptive Gauss-Kronrod over the polar domain)
            or "grid" (fixed tensor Gauss-Legendre with ``n`` nodes per axis).
        atol, rtol: tolerances of the adaptive rule, applied to the integrals
            normalized by mu*F_n and mu*F_n*R.

    Returns:
        LimitSurfacePoint with F_t >= 0 and M_n >= 0.

    Raises:
        QuadratureError: the adaptive rule stopped before meeting tolerance.
    """
    if d_c < 0:
        raise ValueError(f"COR distance must be non-negative, got {d_c}")
    if patch.normal_force == 0:
        return LimitSurfacePoint(0.0, 0.0, float(d_c))
    R = patch.radius
    s = d_c / R
    if method == "adaptive":
        ft, mn = _normalized_adaptive(s, mat.k, atol, rtol)
    elif method == "grid":
        ft, mn = _normalized_grid(s, mat.k, n)
    else:
        raise ValueError(f"unknown quadrature method {method!r}")
    scale = patch.mu * patch.normal_force
    # F_t vanishes by symmetry at d_c = 0; drop round-off of either sign.
    return LimitSurfacePoint(max(ft, 0.0) * scale if s > 0 else 0.0, mn * scale * R, float(d_c))


def max_moment(patch: ContactPatch, mat: SoftMaterial = DEFAULT_MATERIAL, **quad_kw) -> float:
    """Largest normal moment the patch transmits (pure spin, d_c = 0)."""
    return friction_integrals(0.0, patch, mat, **quad_kw).M_n


def limit_surface_residual(F_t: float, M_n: float, patch: ContactPatch,
                           mat: SoftMaterial = DEFAULT_MATERIAL) -> float:
    """Elliptic limit-surface residual; < 0 sticks, 0 on the surface, > 0 slips.

    M_max uses the closed-form spin moment, which agrees with the
    quadrature value to its tolerance.
    """
    if patch.normal_force == 0:
        return math.inf if (F_t != 0 or M_n != 0) else 0.0
    f_max = patch.mu * patch.normal_force
    m_max = moment_coefficient(mat.k) * f_max * patch.radius
    return (F_t / f_max) ** 2 + (M_n / m_max) ** 2 - 1.0


@dataclass(frozen=True)
class TorqueCurve:
    """Normalized limit-surface locus sampled over d_c / R."""

    d_ratio: np.ndarray
    ft_ratio: np.ndarray
    mn_ratio: np.ndarray

    def rows(self):
        return list(zip(self.d_ratio.tolist(), self.ft_ratio.tolist(), self.mn_ratio.tolist()))

    def ellipse_residual(self) -> np.ndarray:
        return self.ft_ratio**2 + self.mn_ratio**2 - 1.0


def limit_surface_locus(mat: SoftMaterial, d_ratios, **quad_kw) -> TorqueCurve:
    """Normalized (F_t/F_max, M_n/M_max) at the given d_c/R values.

    The normalized locus depends on k only, so a unit patch is integrated.
    """
    d = np.asarray(d_ratios, dtype=float)
    unit = ContactPatch(1.0, 1.0, 1.0)
    m_max = max_moment(unit, mat, **quad_kw)
    ft = np.empty_like(d)
    mn = np.empty_like(d)
    for i, s in enumerate(d):
        pt = friction_integrals(float(s), unit, mat, **quad_kw)
        ft[i] = pt.F_t
        mn[i] = pt.M_n / m_max
    mn[d == 0] = 1.0
    return TorqueCurve(d, ft, mn)


def torque_curve(mat: SoftMaterial = DEFAULT_MATERIAL, samples: int = 101,
                 d_max: float = 10.0, **quad_kw) -> TorqueCurve:
    """Normalized torque against COR position, d_c/R evenly spaced in [0, d_max]."""
    if samples < 2:
        raise ValueError("torque curve needs at least two samples")
    return limit_surface_locus(mat, np.linspace(0.0, d_max, samples), **quad_kw)


CURVE_HEADER = ("d_c_over_R", "F_t_over_Fmax", "M_n_over_Mmax")


def write_curve_csv(curve: TorqueCurve, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for row in curve.rows():
            writer.writerow([f"{v:.12g}" for v in row])
    return path
