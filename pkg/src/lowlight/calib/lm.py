"""Damped Gauss-Newton (Levenberg-Marquardt) least squares."""
from dataclasses import dataclass

import numpy as np

from ..exceptions import NumericError


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    initial_cost: float
    iterations: int
    converged: bool


def numeric_jacobian(fun, x, r0=None):
    """Central-difference Jacobian of ``fun`` at ``x``."""
    r0 = fun(x) if r0 is None else r0
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        h = 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (fun(xp) - fun(xm)) / (2.0 * h)
    return J


def levenberg_marquardt(fun, x0, jac=None, max_iter=100, rtol=1e-12, lam0=1e-3, max_tries=12):
    """Minimize ``sum(fun(x) ** 2)`` starting at ``x0``.

    A step is accepted only if it lowers the cost, so the returned cost never
    exceeds the initial one. Iteration stops when an accepted step lowers the
    cost by less than ``rtol`` relative, when the cost reaches zero, or when
    no damping level yields a decrease (a numerical minimum).
    ``converged`` is False only when ``max_iter`` runs out first.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    r = fun(x)
    cost = float(r @ r)
    if not np.isfinite(cost):
        raise NumericError("non-finite initial cost")
    initial = cost
    lam = lam0
    for it in range(1, max_iter + 1):
        if cost == 0.0:
            return LMResult(x, cost, initial, it - 1, True)
        J = jac(x) if jac is not None else numeric_jacobian(fun, x, r)
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        diag[diag == 0] = 1.0
        improved = False
        for _ in range(max_tries):
            A = JtJ + lam * np.diag(diag)
            try:
                step = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + step
            r_new = fun(x_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                improved = True
                break
            lam *= 10.0
        if not improved:
            return LMResult(x, cost, initial, it, True)
        rel = (cost - cost_new) / cost
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if rel < rtol:
            return LMResult(x, cost, initial, it, True)
    return LMResult(x, cost, initial, max_iter, False)
