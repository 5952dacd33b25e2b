"""Damped Newton iteration with a finite-difference Jacobian."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: np.ndarray
    iterations: int
    converged: bool
    message: str = ""

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0


def fd_jacobian(fun, x, fx, step=1e-7):
    """Central-difference Jacobian with step ``step * max(1, |x_i|)``."""
    n = x.size
    jac = np.empty((fx.size, n))
    for i in range(n):
        h = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return jac


def damped_newton(
    fun: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float = 1e-12,
    max_iter: int = 200,
    step: float = 1e-7,
    accept_tol: float = 1e-10,
) -> NewtonResult:
    """Solve ``fun(x) = 0`` by Newton steps with Armijo backtracking.

    Converges when the max-norm residual drops to ``tol``.  When the line
    search stalls at the rounding-noise floor, a residual below ``accept_tol``
    is still reported as converged.  Non-finite residuals count as infeasible
    points and are backtracked away from.
    """
    x = np.array(x0, dtype=float)
    try:
        fx = np.asarray(fun(x), dtype=float)
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        return NewtonResult(x, np.full(x.size, np.inf), 0, False, f"bad start: {exc}")
    if not np.all(np.isfinite(fx)):
        return NewtonResult(x, fx, 0, False, "non-finite residual at start")

    def merit(f):
        return 0.5 * float(f @ f)

    for it in range(1, max_iter + 1):
        if np.max(np.abs(fx)) <= tol:
            return NewtonResult(x, fx, it - 1, True)
        try:
            jac = fd_jacobian(fun, x, fx, step)
            dx = np.linalg.solve(jac, -fx)
        except (np.linalg.LinAlgError, ValueError, ArithmeticError):
            dx = None
        if dx is None or not np.all(np.isfinite(dx)):
            ok = np.max(np.abs(fx)) <= accept_tol
            return NewtonResult(x, fx, it, ok, "singular Jacobian")
        f0 = merit(fx)
        lam = 1.0
        while lam > 1e-10:
            xn = x + lam * dx
            try:
                fn = np.asarray(fun(xn), dtype=float)
            except (ValueError, ArithmeticError):
                fn = None
            if fn is not None and np.all(np.isfinite(fn)):
                # Armijo condition on 0.5*|F|^2, slope along the Newton step is -2*f0
                if merit(fn) <= (1.0 - 1e-4 * lam) * f0:
                    break
            lam *= 0.5
        else:
            ok = np.max(np.abs(fx)) <= accept_tol
            return NewtonResult(x, fx, it, ok, "line search failed")
        x, fx = xn, fn
    ok = np.max(np.abs(fx)) <= accept_tol
    return NewtonResult(x, fx, max_iter, ok, "iteration limit")
