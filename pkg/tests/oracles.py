"""Independent reference computations used by the tests.

Nothing here imports the code under test except plain data containers.
"""
import itertools
import math
from collections import Counter

import numpy as np

FLOOR = 1e-12


# --------------------------------------------------------------------------
# LP: enumerate basic feasible solutions of  max c.x, A x <= b, x >= 0


def _vertices(G, h, tol=1e-9):
    """All vertices of ``{x : G x <= h}`` in R^n (G has >= n rows)."""
    m, n = G.shape
    combos = np.array(list(itertools.combinations(range(m), n)))
    if not len(combos):
        return np.zeros((0, n))
    Gs = G[combos]
    hs = h[combos]
    det = np.linalg.det(Gs)
    ok = np.abs(det) > 1e-10
    if not ok.any():
        return np.zeros((0, n))
    xs = np.linalg.solve(Gs[ok], hs[ok][..., None])[..., 0]
    feas = np.all(xs @ G.T <= h + tol * (1 + np.abs(h)), axis=1)
    return xs[feas]


def lp_enumerate(c, A, b, tol=1e-9):
    """Return ``(status, optimum)`` by vertex enumeration."""
    c = np.asarray(c, float)
    A = np.atleast_2d(np.asarray(A, float))
    b = np.asarray(b, float)
    m, n = A.shape
    G = np.vstack([A, -np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    verts = _vertices(G, h, tol)
    if not len(verts):
        return "infeasible", None
    # recession directions normalized to the simplex sum(d) <= 1
    Gd = np.vstack([A, -np.eye(n), np.ones((1, n))])
    hd = np.concatenate([np.zeros(m), np.zeros(n), [1.0]])
    dirs = _vertices(Gd, hd, tol)
    if len(dirs) and (dirs @ c).max() > 1e-9:
        return "unbounded", None
    return "optimal", float((verts @ c).max())


# --------------------------------------------------------------------------
# NMI by explicit contingency counting


def nmi_bruteforce(a, b):
    n = len(a)
    ca, cb = Counter(a), Counter(b)
    joint = Counter(zip(a, b))
    ha = -sum(v / n * math.log(v / n) for v in ca.values())
    hb = -sum(v / n * math.log(v / n) for v in cb.values())
    if ha == 0 and hb == 0:
        return 1.0
    if ha == 0 or hb == 0:
        return 0.0
    mi = 0.0
    for (x, y), v in joint.items():
        mi += v / n * math.log((v / n) / ((ca[x] / n) * (cb[y] / n)))
    return mi / math.sqrt(ha * hb)


# --------------------------------------------------------------------------
# AIC of a grouped assignment, from scratch


def ols(X, y):
    A = np.column_stack([np.ones(len(y)), X])
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    return coef


def aic(rss, n, k):
    return n * math.log(max(rss, n * FLOOR) / n) + 2 * k


def overall_aic_oracle(X, y, assignment, train_rows, eval_rows):
    """Fit one OLS model per used label on its groups' train rows; sum group AICs."""
    total = 0.0
    models = {}
    for lab in sorted(set(assignment)):
        rows = np.concatenate([train_rows[i] for i, a in enumerate(assignment) if a == lab])
        models[lab] = ols(X[rows], y[rows])
    for i, lab in enumerate(assignment):
        coef = models[lab]
        rows = eval_rows[i]
        resid = y[rows] - coef[0] - X[rows] @ coef[1:]
        k = 1 + int(np.count_nonzero(coef[1:]))
        total += aic(float(resid @ resid), len(rows), k)
    return total


def exhaustive_min_aic(X, y, M, K, train_rows, eval_rows):
    best = math.inf
    for a in itertools.product(range(K), repeat=M):
        best = min(best, overall_aic_oracle(X, y, list(a), train_rows, eval_rows))
    return best


# --------------------------------------------------------------------------
# MOO: feasibility-filtered grid maximization


def moo_grid_optimum(beta0, beta, sig_p, gamma0, gamma, sig_se, coll, k, se_floor,
                     lower, upper, step=0.01):
    """Max of ``f_P(x) + k sig_p`` over grid points that admit a feasible (t, SE).

    ``coll`` is a list of ``(alpha0, alpha, sigma)`` per feature.
    """
    axes = [np.arange(lo, hi + step / 2, step) for lo, hi in zip(lower, upper)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    ok = pts @ gamma + gamma0 + k * sig_se >= se_floor
    for i, (a0, a, s) in enumerate(coll):
        ok &= np.abs(pts[:, i] - (a0 + pts @ a)) <= k * s
    if not ok.any():
        return None
    return float((pts[ok] @ beta + beta0 + k * sig_p).max())


def random_lp(rng):
    """Small integer LP ``(c, A, b)``; a mix of feasible, infeasible and unbounded cases."""
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 11))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-2, 8, size=m).astype(float)
    c = rng.integers(-3, 4, size=n).astype(float)
    if rng.random() < 0.5:
        # make most instances bounded by adding a box-like cap
        A = np.vstack([A, np.ones((1, n))])
        b = np.append(b, float(rng.integers(1, 10)))
    return c, A, b
