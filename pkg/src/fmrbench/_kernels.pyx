# cython: language_level=3
"""Compiled inner loops: LASSO coordinate descent and one-sided Jacobi SVD.

Semantics match ``_kernels_py`` exactly; only summation order differs.
"""
import numpy as np

from libc.math cimport fabs, sqrt


cdef inline double _soft(double z, double lam) nogil:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def lasso_cd(const double[::1, :] X, const double[::1] y, double lam,
             double tol, int max_iter, beta_init=None):
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1]
    cdef Py_ssize_t i, j
    cdef int it, sweeps = 0
    cdef bint converged = False
    cdef double b0 = 0.0, m, rho, new, d, maxdelta, inv_n = 1.0 / n

    beta_arr = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=np.float64)
    r_arr = np.empty(n)
    colsq_arr = np.empty(p)
    cdef double[::1] beta = beta_arr
    cdef double[::1] r = r_arr
    cdef double[::1] colsq = colsq_arr

    with nogil:
        for i in range(n):
            r[i] = y[i]
        for j in range(p):
            d = 0.0
            for i in range(n):
                d += X[i, j] * X[i, j]
            colsq[j] = d * inv_n
            if beta[j] != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * beta[j]

        for it in range(max_iter):
            sweeps += 1
            m = 0.0
            for i in range(n):
                m += r[i]
            m *= inv_n
            b0 += m
            for i in range(n):
                r[i] -= m
            maxdelta = fabs(m)
            for j in range(p):
                if colsq[j] == 0.0:
                    continue
                rho = 0.0
                for i in range(n):
                    rho += X[i, j] * r[i]
                rho = rho * inv_n + colsq[j] * beta[j]
                new = _soft(rho, lam) / colsq[j]
                d = new - beta[j]
                if d != 0.0:
                    for i in range(n):
                        r[i] -= d * X[i, j]
                    beta[j] = new
                    if fabs(d) > maxdelta:
                        maxdelta = fabs(d)
            if maxdelta < tol:
                converged = True
                break

    return b0, beta_arr, sweeps, bool(converged)


def jacobi_svd(A, double tol=1e-15, int max_sweeps=100):
    a = np.asarray(A, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("jacobi_svd expects a 2-D array")
    if a.shape[0] < a.shape[1]:
        u, s, vt = jacobi_svd(a.T, tol, max_sweeps)
        return vt.T.copy(), s, u.T.copy()

    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef int sweep
    cdef bint rotated
    cdef double alpha, beta, gamma, zeta, t, c, s_, ui, uj

    u_arr = np.asfortranarray(a.copy())
    v_arr = np.asfortranarray(np.eye(n))
    cdef double[::1, :] U = u_arr
    cdef double[::1, :] V = v_arr

    with nogil:
        for sweep in range(max_sweeps):
            rotated = False
            for i in range(n - 1):
                for j in range(i + 1, n):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for k in range(m):
                        alpha += U[k, i] * U[k, i]
                        beta += U[k, j] * U[k, j]
                        gamma += U[k, i] * U[k, j]
                    if gamma == 0.0 or fabs(gamma) <= tol * sqrt(alpha * beta):
                        continue
                    rotated = True
                    zeta = (beta - alpha) / (2.0 * gamma)
                    if zeta >= 0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s_ = c * t
                    for k in range(m):
                        ui = U[k, i]
                        uj = U[k, j]
                        U[k, i] = c * ui - s_ * uj
                        U[k, j] = s_ * ui + c * uj
                    for k in range(n):
                        ui = V[k, i]
                        uj = V[k, j]
                        V[k, i] = c * ui - s_ * uj
                        V[k, j] = s_ * ui + c * uj
            if not rotated:
                break

    return _finish(u_arr, v_arr)


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
