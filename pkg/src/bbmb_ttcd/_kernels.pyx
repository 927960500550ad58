# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the cyclic tridiagonal and coupled-block kernels.

Mirrors ``_kernels_py`` exactly (same factor tuple, same conventions); the
coupled solve assembles the zigzag band in C and calls LAPACK ``dgbsv``
without the GIL.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite
from scipy.linalg.cython_lapack cimport dgbsv

from .errors import SingularMatrix
from ._kernels_py import zigzag_positions

cnp.import_array()

cdef double _EPS = np.finfo(float).eps
cdef enum:
    BAND = 5


cdef int _core_factor(const double[::1] sub, double[::1] b, const double[::1] sup,
                      double[::1] lower, double[::1] piv) noexcept nogil:
    cdef Py_ssize_t i, M = b.shape[0]
    cdef double scale
    piv[0] = b[0]
    lower[0] = 0.0
    scale = fabs(sub[0]) + fabs(b[0]) + fabs(sup[0])
    if not fabs(piv[0]) > 64 * _EPS * scale:
        return 0
    for i in range(1, M):
        lower[i] = sub[i] / piv[i - 1]
        piv[i] = b[i] - lower[i] * sup[i - 1]
        scale = fabs(sub[i]) + fabs(b[i]) + fabs(sup[i])
        if not fabs(piv[i]) > 64 * _EPS * scale:
            return <int>i
    return -1


cdef void _core_solve_inplace(const double[::1] lower, const double[::1] piv,
                              const double[::1] sup, double[::1] y) noexcept nogil:
    cdef Py_ssize_t i, M = piv.shape[0]
    for i in range(1, M):
        y[i] -= lower[i] * y[i - 1]
    y[M - 1] /= piv[M - 1]
    for i in range(M - 2, -1, -1):
        y[i] = (y[i] - sup[i] * y[i + 1]) / piv[i]


cdef void _core_solve_cols(const double[::1] lower, const double[::1] piv,
                           const double[::1] sup, double[:, ::1] y) noexcept nogil:
    cdef Py_ssize_t i, c, M = piv.shape[0], K = y.shape[1]
    for i in range(1, M):
        for c in range(K):
            y[i, c] -= lower[i] * y[i - 1, c]
    for c in range(K):
        y[M - 1, c] /= piv[M - 1]
    for i in range(M - 2, -1, -1):
        for c in range(K):
            y[i, c] = (y[i, c] - sup[i] * y[i + 1, c]) / piv[i]


def cyclic_factor(sub, diag, sup):
    cdef double[::1] s = np.ascontiguousarray(sub, dtype=float).copy()
    cdef double[::1] b = np.ascontiguousarray(diag, dtype=float).copy()
    cdef double[::1] u = np.ascontiguousarray(sup, dtype=float).copy()
    cdef Py_ssize_t M = b.shape[0]
    cdef double alpha = u[M - 1], beta = s[0]
    cdef double gamma = -b[0] if b[0] != 0.0 else -1.0
    b[0] -= gamma
    b[M - 1] -= alpha * beta / gamma
    s[0] = 0.0
    u[M - 1] = 0.0
    lower = np.empty(M)
    piv = np.empty(M)
    cdef int bad = _core_factor(s, b, u, lower, piv)
    if bad >= 0:
        raise SingularMatrix("zero pivot in cyclic tridiagonal elimination", row=bad)
    cdef double[::1] lv = lower
    cdef double[::1] pv = piv
    z = np.zeros(M)
    cdef double[::1] zv = z
    zv[0] = gamma
    zv[M - 1] = alpha
    _core_solve_inplace(lv, pv, u, zv)
    cdef double vlast = beta / gamma
    cdef double denom = 1.0 + zv[0] + vlast * zv[M - 1]
    if not fabs(denom) > 64 * _EPS * (1.0 + fabs(zv[0]) + fabs(vlast * zv[M - 1])):
        raise SingularMatrix("singular Sherman-Morrison correction", row=M - 1)
    return lower, piv, np.asarray(u), z, float(vlast), float(denom)


def cyclic_solve(factor, rhs):
    lower, piv, sup, z, vlast, denom = factor
    cdef const double[::1] lv = lower
    cdef const double[::1] pv = piv
    cdef const double[::1] sv = sup
    y = np.array(rhs, dtype=float, order="C", copy=True)
    cdef double[::1] yv
    cdef double[:, ::1] ym
    if y.ndim == 1:
        yv = y
        with nogil:
            _core_solve_inplace(lv, pv, sv, yv)
        coef = (y[0] + vlast * y[-1]) / denom
        y -= coef * z
        return y
    ym = y
    with nogil:
        _core_solve_cols(lv, pv, sv, ym)
    coef = (y[0] + vlast * y[-1]) / denom
    y -= z[:, None] * coef[None, :]
    return y


def block_cyclic_solve(blocks, rhs):
    cdef double[:, :, :, ::1] B = np.ascontiguousarray(blocks, dtype=float)
    cdef double[:, ::1] R = np.ascontiguousarray(rhs, dtype=float)
    cdef int M = <int>B.shape[3]
    cdef int n = 2 * M, kl = BAND, ku = BAND, nrhs = 1
    cdef int ldab = 2 * BAND + BAND + 1, ldb = n, info = 0
    cdef cnp.intp_t[::1] pos = zigzag_positions(M)
    # Fortran (ldab, n) storage == C (n, ldab)
    cdef double[:, ::1] ab = np.zeros((n, ldab))
    cdef double[::1] b = np.empty(n)
    cdef int[::1] ipiv = np.empty(n, dtype=np.intc)
    cdef Py_ssize_t p, q, i, j, k, row, col
    out = np.empty((2, M))
    cdef double[:, ::1] X = out
    cdef bint finite = True
    with nogil:
        for p in range(M):
            for k in range(3):
                q = (p + k - 1 + M) % M
                for i in range(2):
                    row = 2 * pos[p] + i
                    for j in range(2):
                        col = 2 * pos[q] + j
                        ab[col, kl + ku + row - col] = B[i, j, k, p]
            for i in range(2):
                b[2 * pos[p] + i] = R[i, p]
        dgbsv(&n, &kl, &ku, &nrhs, &ab[0, 0], &ldab, &ipiv[0], &b[0], &ldb, &info)
        if info == 0:
            for p in range(M):
                for i in range(2):
                    X[i, p] = b[2 * pos[p] + i]
                    if not isfinite(X[i, p]):
                        finite = False
    if info > 0:
        raise SingularMatrix(f"singular coupled step matrix (zero pivot {info})")
    if info < 0:
        raise ValueError(f"dgbsv rejected argument {-info}")
    if not finite:
        raise SingularMatrix("non-finite solution of coupled step system")
    return out
