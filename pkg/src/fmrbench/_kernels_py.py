"""Pure-Python/numpy fallback for the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def _soft(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def lasso_cd(X, y, lam, tol, max_iter, beta_init=None):
    """Cyclic coordinate descent for ``(2n)^-1 ||y - b0 - X b||^2 + lam ||b||_1``.

    The intercept is unpenalized and refreshed at the start of every sweep.

    Returns
    -------
    (intercept, beta, sweeps, converged)
    """
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=np.float64)
    r = y - X @ beta
    colsq = np.einsum("ij,ij->j", X, X) / n
    b0 = 0.0
    sweeps = 0
    converged = False
    for _ in range(max_iter):
        sweeps += 1
        m = r.mean()
        b0 += m
        r -= m
        maxdelta = abs(m)
        for j in range(p):
            if colsq[j] == 0.0:
                continue
            xj = X[:, j]
            rho = xj @ r / n + colsq[j] * beta[j]
            new = _soft(rho, lam) / colsq[j]
            d = new - beta[j]
            if d != 0.0:
                r -= d * xj
                beta[j] = new
                maxdelta = max(maxdelta, abs(d))
        if maxdelta < tol:
            converged = True
            break
    return b0, beta, sweeps, converged


def jacobi_svd(A, tol=1e-15, max_sweeps=100):
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Returns ``(U, s, Vt)`` with ``s`` sorted descending and
    ``U @ diag(s) @ Vt == A`` to rounding.
    """
    a = np.asarray(A, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("jacobi_svd expects a 2-D array")
    if a.shape[0] < a.shape[1]:
        u, s, vt = jacobi_svd(a.T, tol, max_sweeps)
        return vt.T.copy(), s, u.T.copy()
    n = a.shape[1]
    U = np.asfortranarray(a.copy())
    V = np.asfortranarray(np.eye(n))
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ui, uj = U[:, i], U[:, j]
                alpha = ui @ ui
                beta = uj @ uj
                gamma = ui @ uj
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                ui_old = ui.copy()
                U[:, i] = c * ui_old - s * uj
                U[:, j] = s * ui_old + c * uj
                vi_old = V[:, i].copy()
                V[:, i] = c * vi_old - s * V[:, j]
                V[:, j] = s * vi_old + c * V[:, j]
        if not rotated:
            break
    return _finish(U, V)


def _finish(u, v):
    s = np.sqrt(np.einsum("ij,ij->j", u, u))
    order = np.argsort(-s, kind="stable")
    s = s[order]
    u = u[:, order]
    v = v[:, order]
    nz = s > 0
    u[:, nz] /= s[nz]
    u[:, ~nz] = 0.0
    return np.ascontiguousarray(u), s, np.ascontiguousarray(v.T)
