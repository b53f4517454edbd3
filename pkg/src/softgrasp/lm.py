"""Small dense Levenberg-Marquardt solver for square or overdetermined systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LMResult", "levenberg_marquardt"]


@dataclass(frozen=True)
class LMResult:
    x: np.ndarray
    fun: np.ndarray
    cost: float
    iterations: int
    converged: bool


def levenberg_marquardt(fun, jac, x0, *, damping: float = 1e-3, factor: float = 10.0,
                        max_iter: int = 200, gtol: float = 1e-10, ftol: float = 1e-14,
                        xtol: float = 1e-15, diag_floor: float = 1e-6) -> LMResult:
    """Minimize 0.5*|fun(x)|^2 with Marquardt's diagonal scaling.

    Each entry of the scaling diagonal is floored at ``diag_floor`` times the
    largest one, so a direction whose sensitivity vanishes at the current
    iterate still gets damped. This assumes the unknowns are comparably scaled.

    ``converged`` reports whether a stopping test fired before ``max_iter``;
    it says nothing about the residual being zero. Non-finite trial points are
    rejected like any other uphill step.
    """
    x = np.array(x0, dtype=float)
    f = np.asarray(fun(x), dtype=float)
    if not np.all(np.isfinite(f)):
        return LMResult(x, f, np.inf, 0, False)
    cost = 0.5 * f @ f
    lam = damping
    for it in range(1, max_iter + 1):
        J = np.asarray(jac(x), dtype=float)
        g = J.T @ f
        if np.max(np.abs(g)) <= gtol or cost <= 0.5 * ftol**2:
            return LMResult(x, f, cost, it - 1, True)
        A = J.T @ J
        diag = np.diag(A)
        diag = np.maximum(diag, max(diag_floor * diag.max(), 1e-300))
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= factor
                continue
            x_new = x + step
            f_new = np.asarray(fun(x_new), dtype=float)
            if np.all(np.isfinite(f_new)):
                cost_new = 0.5 * f_new @ f_new
                if cost_new < cost:
                    accepted = True
                    break
            lam *= factor
        if not accepted:
            return LMResult(x, f, cost, it, True)
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol)
        x, f, cost = x_new, f_new, cost_new
        lam = max(lam / factor, 1e-15)
        if small_step:
            return LMResult(x, f, cost, it, True)
    return LMResult(x, f, cost, max_iter, False)
