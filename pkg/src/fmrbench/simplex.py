"""Dense two-phase simplex with Bland's rule.

Solves ``max c.v  s.t.  A v <= b,  lower <= v <= upper`` where bounds may be
infinite. Variables are shifted/split to the non-negative orthant, rows with
negative right-hand side get an artificial variable, and phase 1 drives the
artificials to zero before phase 2 optimizes the real objective.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: tuple = ()
    row_names: tuple = ()

    def __post_init__(self):
        m, n = self.A.shape
        if self.c.shape != (n,) or self.b.shape != (m,):
            raise ValueError("inconsistent LP dimensions")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        for arr in (self.c, self.A, self.b):
            if not np.isfinite(arr).all():
                raise ValueError("LP coefficients must be finite")

    @classmethod
    def standard(cls, c, A, b) -> "LinearProgram":
        """``max c.x  s.t.  A x <= b, x >= 0``."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        n = A.shape[1]
        return cls(np.asarray(c, dtype=np.float64), A, np.asarray(b, dtype=np.float64),
                   np.zeros(n), np.full(n, np.inf))

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def slack(self, v) -> np.ndarray:
        return self.b - self.A @ v


@dataclass
class LPSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0


def _to_nonneg(lp: LinearProgram):
    """Rewrite variables as affine maps of non-negative ones.

    Returns ``(A', b', c', T, offset, const)`` with ``v = T @ w + offset``,
    ``w >= 0`` and extra rows for two-sided bounds.
    """
    n = lp.n_vars
    cols = []
    offset = np.zeros(n)
    extra_rows = []
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    T = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    A = lp.A @ T
    b = lp.b - lp.A @ offset
    if extra_rows:
        E = np.zeros((len(extra_rows), len(cols)))
        for r, (k, ub) in enumerate(extra_rows):
            E[r, k] = 1.0
        A = np.vstack([A, E])
        b = np.concatenate([b, [ub for _, ub in extra_rows]])
    return A, b, lp.c @ T, T, offset, float(lp.c @ offset)


def _pivot(T, row, col):
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _iterate(T, basis, allowed, tol, max_iter):
    """Bland's-rule simplex on tableau ``T`` (last row: reduced costs z - c)."""
    m = T.shape[0] - 1
    it = 0
    while it < max_iter:
        red = T[-1, :-1]
        entering = next((j for j in allowed if red[j] < -tol), None)
        if entering is None:
            return OPTIMAL, it
        column = T[:m, entering]
        pos = column > tol
        if not pos.any():
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        leaving = min(ties, key=lambda i: basis[i])
        _pivot(T, leaving, entering)
        basis[leaving] = entering
        it += 1
    raise RuntimeError("simplex iteration limit reached")


def solve_standard(c, A, b, tol: float = 1e-9, max_iter: int = 50_000) -> LPSolution:
    """``max c.x  s.t.  A x <= b, x >= 0``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    neg = b < 0
    n_art = int(neg.sum())
    # columns: x (n) | slack/surplus (m) | artificial (n_art) | rhs
    T = np.zeros((m + 1, n + m + n_art + 1))
    sign = np.where(neg, -1.0, 1.0)
    T[:m, :n] = A * sign[:, None]
    T[:m, n:n + m] = np.diag(sign)
    T[:m, -1] = b * sign
    basis = np.empty(m, dtype=np.intp)
    art_rows = np.flatnonzero(neg)
    for k, i in enumerate(art_rows):
        T[i, n + m + k] = 1.0
        basis[i] = n + m + k
    basis[~neg] = n + np.flatnonzero(~neg)

    iters = 0
    if n_art:
        cost = np.zeros(n + m + n_art)
        cost[n + m:] = -1.0
        T[-1, :-1] = -cost
        T[-1] += cost[basis] @ T[:m]
        status, it = _iterate(T, basis, range(n + m + n_art), tol, max_iter)
        iters += it
        if T[-1, -1] < -tol * max(1.0, np.abs(b).max()):
            return LPSolution(INFEASIBLE, iterations=iters)
        # drive remaining (zero-valued) artificials out of the basis
        for i in range(m):
            if basis[i] >= n + m:
                row = T[i, :n + m]
                cand = np.flatnonzero(np.abs(row) > tol)
                if len(cand):
                    _pivot(T, i, int(cand[0]))
                    basis[i] = int(cand[0])
        keep = basis < n + m
        T = np.vstack([T[:m][keep], T[-1:]])
        T = np.delete(T, np.s_[n + m:n + m + n_art], axis=1)
        basis = basis[keep]
        m = len(basis)

    cost = np.zeros(T.shape[1] - 1)
    cost[:n] = c
    T[-1, :-1] = -cost
    T[-1, -1] = 0.0
    T[-1] += cost[basis] @ T[:-1]
    status, it = _iterate(T, basis, range(T.shape[1] - 1), tol, max_iter)
    iters += it
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED, iterations=iters)
    x = np.zeros(T.shape[1] - 1)
    x[basis] = T[:-1, -1]
    return LPSolution(OPTIMAL, np.maximum(x[:n], 0.0), float(c @ x[:n]), iters)


def solve_lp(lp: LinearProgram, tol: float = 1e-9) -> LPSolution:
    A, b, c, T, offset, const = _to_nonneg(lp)
    sol = solve_standard(c, A, b, tol)
    if sol.status != OPTIMAL:
        return sol
    v = T @ sol.x + offset
    return LPSolution(OPTIMAL, v, float(lp.c @ v), sol.iterations)
