"""Sequential minimal optimisation for box- and equality-constrained kernel duals.

Solves::

    min_a  0.5 a'Qa + p'a   s.t.  y'a = const,  0 <= a_i <= C

with Q_ij = y_i y_j K_ij. Both C-SVC and epsilon-SVR reduce to this form. The
working pair is chosen by maximal violation for the first index and
second-order gain for the second; each step solves the two-variable
subproblem exactly and clips it to the box.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

TAU = 1e-12


@dataclass
class SolverResult:
    alpha: np.ndarray
    rho: float  # decision function is sum(coef * K) - rho
    gap: float  # m(a) - M(a) at exit; <= tol means KKT holds within tol
    iterations: int
    converged: bool
    objective_history: list = field(default_factory=list)  # dual (maximisation) objective

    @property
    def dual_objective(self) -> float:
        return self.objective_history[-1] if self.objective_history else float("nan")


def _rho(y, G, alpha, C) -> float:
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


def solve(
    column: Callable[[int], np.ndarray],
    diag: np.ndarray,
    p: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = 1e-3,
    max_iter: int | None = None,
    track_objective: bool = False,
) -> SolverResult:
    """Run SMO from a = 0.

    ``column(i)`` must return the i-th column of Q (labels folded in) and
    ``diag`` its diagonal. With ``track_objective`` the dual objective is
    recorded after every step and checked to never decrease.
    """
    n = p.shape[0]
    y = np.asarray(y, dtype=np.float64)
    alpha = np.zeros(n)
    G = np.array(p, dtype=np.float64)  # gradient Qa + p at a = 0
    if max_iter is None:
        max_iter = max(10_000, 10 * n * n)
    history = []
    if track_objective:
        history.append(0.0)

    gap = np.inf
    it = 0
    converged = False
    while it < max_iter:
        yG = y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            converged = True
            break
        score_up = np.where(up, -yG, -np.inf)
        i = int(np.argmax(score_up))
        g_max = score_up[i]
        g_max2 = np.max(np.where(low, yG, -np.inf))
        gap = g_max + g_max2
        if gap < tol:
            converged = True
            break

        Qi = column(i)
        grad_diff = g_max + yG
        quad = diag[i] + diag - 2.0 * y[i] * y * Qi
        quad = np.where(quad > 0, quad, TAU)
        gain = np.where(low & (grad_diff > 0), -(grad_diff * grad_diff) / quad, np.inf)
        j = int(np.argmin(gain))
        if not np.isfinite(gain[j]):
            converged = True
            break
        Qj = column(j)

        ai_old, aj_old = alpha[i], alpha[j]
        ai, aj = ai_old, aj_old
        if y[i] != y[j]:
            q = diag[i] + diag[j] + 2.0 * Qi[j]
            q = q if q > 0 else TAU
            delta = (-G[i] - G[j]) / q
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            q = diag[i] + diag[j] - 2.0 * Qi[j]
            q = q if q > 0 else TAU
            delta = (G[i] - G[j]) / q
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Qi * (ai - ai_old) + Qj * (aj - aj_old)
        it += 1

        if track_objective:
            obj = -0.5 * float(alpha @ (G + p))
            prev = history[-1]
            assert obj >= prev - 1e-9 * max(1.0, abs(prev)), (
                f"dual objective decreased at iteration {it}: {prev} -> {obj}"
            )
            history.append(obj)

    if not converged:
        logger.warning("SMO stopped after %d iterations with KKT gap %.3g > tol %.3g", it, gap, tol)
    if not track_objective:
        history.append(-0.5 * float(alpha @ (G + p)))
    return SolverResult(alpha, _rho(y, G, alpha, C), float(gap), it, converged, history)
