"""Independent reference solutions used by the tests.

The dual QP oracles enumerate every assignment of each variable to
{lower bound, upper bound, free}, solve the equality-constrained stationarity
system for the free set, and keep the assignment that satisfies all KKT
conditions. On a strictly convex problem exactly one assignment does, so the
result does not depend on any iterative solver.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def rbf(A, B, gamma):
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    return np.exp(-gamma * d2)


def svc_dual_bruteforce(K, y, C, tol=1e-9):
    """max 1'a - 0.5 a'Qa, 0 <= a <= C, y'a = 0.

    Returns (alpha, b_low, b_high): the decision function is
    sum_j a_j y_j K(x_j, x) + b, with b unique when some a_j is free and an
    interval otherwise.
    """
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    best = None
    for states in itertools.product((0, 1, 2), repeat=n):  # 0 lower, 1 upper, 2 free
        s = np.array(states)
        a = np.where(s == 1, C, 0.0)
        F = np.flatnonzero(s == 2)
        if F.size:
            # Q_FF a_F + y_F b = 1 - Q_FB a_B ;  y_F' a_F = -y_B' a_B
            B = np.flatnonzero(s != 2)
            m = F.size
            M = np.zeros((m + 1, m + 1))
            M[:m, :m] = Q[np.ix_(F, F)]
            M[:m, m] = y[F]
            M[m, :m] = y[F]
            rhs = np.concatenate([1.0 - Q[np.ix_(F, B)] @ a[B], [-(y[B] @ a[B])]])
            try:
                sol = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                continue
            a[F] = sol[:m]
            if np.any(a[F] <= tol) or np.any(a[F] >= C - tol):
                continue
            b_lo = b_hi = sol[m]
        else:
            if abs(y @ a) > tol:
                continue
            b_lo, b_hi = -np.inf, np.inf
        g = Q @ a  # y_i * (sum_j a_j y_j K_ij)
        # y_i f(x_i) = g_i + y_i b ; a=0 needs >= 1, a=C needs <= 1
        for i in np.flatnonzero(s != 2):
            need_ge = s[i] == 0
            # bound on b from y_i b >= 1 - g_i (or <=)
            val = (1.0 - g[i]) * y[i]
            if (y[i] > 0) == need_ge:
                b_lo = max(b_lo, val)
            else:
                b_hi = min(b_hi, val)
        if b_lo > b_hi + 1e-9:
            continue
        obj = a.sum() - 0.5 * a @ Q @ a
        if best is None or obj > best[0] + 1e-12:
            best = (obj, a.copy(), b_lo, b_hi)
    if best is None:
        raise RuntimeError("no KKT point found")
    return best[1], best[2], best[3]


def svr_dual_bruteforce(K, t, C, eps, tol=1e-9):
    """epsilon-SVR dual in beta = alpha - alpha*.

    max t'beta - eps |beta|_1 - 0.5 beta'K beta,  |beta_i| <= C,  sum beta = 0.
    Returns (beta, b_low, b_high) for f(x) = sum beta_j K(x_j, x) + b.
    """
    n = t.size
    best = None
    # per sample: -C, negative free, 0, positive free, +C
    for states in itertools.product((-2, -1, 0, 1, 2), repeat=n):
        s = np.array(states)
        beta = np.where(s == 2, C, np.where(s == -2, -C, 0.0))
        F = np.flatnonzero(np.abs(s) == 1)
        B = np.flatnonzero(np.abs(s) != 1)
        if F.size:
            # K_FF beta_F + b = t_F - eps sign_F - K_FB beta_B ; sum beta_F = -sum beta_B
            m = F.size
            M = np.zeros((m + 1, m + 1))
            M[:m, :m] = K[np.ix_(F, F)]
            M[:m, m] = 1.0
            M[m, :m] = 1.0
            rhs = np.concatenate([t[F] - eps * s[F] - K[np.ix_(F, B)] @ beta[B], [-beta[B].sum()]])
            try:
                sol = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                continue
            beta[F] = sol[:m]
            sign_ok = np.all(beta[F] * s[F] > tol)
            if not sign_ok or np.any(np.abs(beta[F]) >= C - tol):
                continue
            b_lo = b_hi = sol[m]
        else:
            if abs(beta.sum()) > tol:
                continue
            b_lo, b_hi = -np.inf, np.inf
        r = t - K @ beta  # residual before the bias: t_i - f(x_i) = r_i - b
        for i in B:
            if s[i] == 0:  # |r_i - b| <= eps
                b_lo, b_hi = max(b_lo, r[i] - eps), min(b_hi, r[i] + eps)
            elif s[i] == 2:  # r_i - b >= eps
                b_hi = min(b_hi, r[i] - eps)
            else:  # r_i - b <= -eps
                b_lo = max(b_lo, r[i] + eps)
        if b_lo > b_hi + 1e-9:
            continue
        obj = t @ beta - eps * np.abs(beta).sum() - 0.5 * beta @ K @ beta
        if best is None or obj > best[0] + 1e-12:
            best = (obj, beta.copy(), b_lo, b_hi)
    if best is None:
        raise RuntimeError("no KKT point found")
    return best[1], best[2], best[3]


def icc_ck_exact(rows):
    """ICC(C,k) from textbook sums of squares in exact rational arithmetic."""
    X = [[Fraction(v) for v in r] for r in rows]
    n, k = len(X), len(X[0])
    grand = sum(sum(r) for r in X) / (n * k)
    row_means = [sum(r) / k for r in X]
    col_means = [sum(X[i][j] for i in range(n)) / n for j in range(k)]
    ss_total = sum((X[i][j] - grand) ** 2 for i in range(n) for j in range(k))
    ss_rows = k * sum((m - grand) ** 2 for m in row_means)
    ss_cols = n * sum((m - grand) ** 2 for m in col_means)
    ss_err = ss_total - ss_rows - ss_cols
    ms_rows = ss_rows / (n - 1)
    ms_err = ss_err / ((n - 1) * (k - 1))
    return ms_rows, ms_err, (ms_rows - ms_err) / ms_rows


# Two-way layout of six targets by four judges (a standard worked example
# for intraclass correlation).
SIX_BY_FOUR = [
    [9, 2, 5, 8],
    [6, 1, 3, 2],
    [8, 4, 6, 8],
    [7, 1, 2, 6],
    [10, 5, 6, 9],
    [6, 2, 4, 7],
]


def normalize_ratings_reference(raw):
    """Loop-based re-implementation of the rating normalisation rules."""
    raw = [list(r) for r in raw]
    n_strokes, n_assessors = len(raw), len(raw[0])
    means, stds = [], []
    for j in range(n_assessors):
        col = [raw[i][j] for i in range(n_strokes) if raw[i][j] == raw[i][j]]
        m = sum(col) / len(col)
        v = sum((c - m) ** 2 for c in col) / len(col)
        means.append(m)
        stds.append(v ** 0.5)
    pooled_mean = sum(means) / len(means)
    within = []
    for j in range(n_assessors):
        within.extend((raw[i][j] - means[j]) ** 2 for i in range(n_strokes) if raw[i][j] == raw[i][j])
    pooled_std = (sum(within) / len(within)) ** 0.5
    out = []
    for i in range(n_strokes):
        zs = []
        for j in range(n_assessors):
            v = raw[i][j]
            if v != v:
                continue
            zs.append((v - means[j]) / stds[j] if stds[j] > 0 else v - means[j])
        z = sum(zs) / len(zs)
        out.append(min(5.0, max(1.0, pooled_mean + pooled_std * z)))
    return out


# -- advice table ----------------------------------------------------------------

# preferred contact regions as (x-span of face width, y-span of face height)
REGIONS = {"FOC": ((0.25, 0.75), (0.50, 0.75)), "FOS": ((0.25, 0.75), (0.50, 0.75)),
           "BOC": ((0.25, 0.75), (0.25, 0.50)), "FOD": ((0.25, 0.75), (0.70, 0.90))}


def _point_in(cell, lo, hi, low_limit, high_limit):
    if cell == "under":
        return (low_limit + lo) / 2
    if cell == "over":
        return (hi + high_limit) / 2
    return (lo + hi) / 2



ADVICE_CELLS = list(itertools.product(
    ["BOC", "FOC", "FOS", "FOD"], ["under", "in", "over"], ["under", "in", "over"], [1.5, 2.99, 3.0, 4.5]))


def advice_cell(stroke, h, v, q):
    """(impact point, expected rule keys) for one cell of the advice table."""
    from strokekit.types import ImpactPoint

    (x0, x1), (y0, y1) = REGIONS[stroke]
    fx = _point_in(h, x0, x1, 0.0, 1.0)
    y = _point_in(v, y0, y1, 0.0, 1.0)
    expected = []
    if v == "under":
        expected.append("location.higher")
    if v == "over":
        expected.append("location.lower")
    if h == "under":
        expected.append("location.right")
    if h == "over":
        expected.append("location.left")
    if q < 3.0:
        expected.append(f"technique.{stroke}")
    return ImpactPoint(fx - 0.5, y), expected or ["praise"]
