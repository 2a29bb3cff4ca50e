# cython: language_level=3
"""Compiled twin of ``_pykernels``: same signatures, plain C loops.

The systems handled here have a handful of degrees of freedom, so the
numpy version spends most of its time in call overhead.  These loops touch
each tensor entry once and allocate only the returned arrays.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite

from .errors import SolverError

cnp.import_array()

NAME = "cython"


cdef inline void _quad(const double[:, :, ::1] dM, const double[::1] v, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0], c, a, b
    cdef double s
    for c in range(n):
        s = 0.0
        for a in range(n):
            for b in range(n):
                s += dM[c, a, b] * v[a] * v[b]
        out[c] = s


cdef inline double _trans(const double[:, :, ::1] dM, const double[::1] v, Py_ssize_t c, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t b
    cdef double s = 0.0
    for b in range(v.shape[0]):
        s += dM[d, c, b] * v[b]
    return s


cdef inline double _grad(const double[:, :, ::1] dM, const double[::1] v, Py_ssize_t c, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t b
    cdef double s = 0.0
    for b in range(v.shape[0]):
        s += dM[c, d, b] * v[b]
    return s


cdef inline double _curv(const double[:, :, :, ::1] d2M, const double[::1] v, Py_ssize_t c, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0], a, b
    cdef double s = 0.0
    for a in range(n):
        for b in range(n):
            s += d2M[c, d, a, b] * v[a] * v[b]
    return s


cdef inline double _mv(const double[:, ::1] M, const double[::1] v, Py_ssize_t c) noexcept nogil:
    cdef Py_ssize_t b
    cdef double s = 0.0
    for b in range(v.shape[0]):
        s += M[c, b] * v[b]
    return s


def gear(double h, const double[::1] ql, const double[::1] qm, const double[::1] q):
    cdef Py_ssize_t n = ql.shape[0], i
    gl = np.empty(n)
    gm = np.empty(n)
    g = np.empty(n)
    cdef double[::1] vl = gl, vm = gm, vr = g
    for i in range(n):
        vl[i] = (-3.0 * ql[i] + 4.0 * qm[i] - q[i]) / h
        vm[i] = (q[i] - ql[i]) / h
        vr[i] = (ql[i] - 4.0 * qm[i] + 3.0 * q[i]) / h
    return gl, gm, g


def simpson_residual(double h,
                     const double[::1] ql, const double[::1] qm, const double[::1] q,
                     const double[::1] pj, const double[::1] p,
                     const double[:, ::1] Ml, const double[:, ::1] Mm, const double[:, ::1] Mq,
                     const double[:, :, ::1] dMl, const double[:, :, ::1] dMm, const double[:, :, ::1] dMq,
                     const double[::1] dVl, const double[::1] dVm, const double[::1] dVq):
    cdef Py_ssize_t n = ql.shape[0], c
    cdef double h2 = h * h
    gl_, gm_, g_ = gear(h, ql, qm, q)
    cdef double[::1] gl = gl_, gm = gm_, g = g_
    cdef double[::1] Ql = np.empty(n), Qm = np.empty(n), Qq = np.empty(n)
    _quad(dMl, gl, Ql)
    _quad(dMm, gm, Qm)
    _quad(dMq, g, Qq)
    out = np.empty(3 * n)
    cdef double[::1] F = out
    for c in range(n):
        F[c] = h * _mv(Mq, g, c) - h * _mv(Ml, gl, c) + h2 * dVm[c] - 0.5 * h2 * Qm[c]
        F[n + c] = (h * (p[c] - pj[c])
                    + h2 * (dVl[c] / 6.0 + 2.0 * dVm[c] / 3.0 + dVq[c] / 6.0)
                    - 0.5 * h2 * (Ql[c] / 6.0 + 2.0 * Qm[c] / 3.0 + Qq[c] / 6.0))
        F[2 * n + c] = (h * (_mv(Ml, gl, c) / 6.0 + 2.0 * _mv(Mm, gm, c) / 3.0 + _mv(Mq, g, c) / 6.0)
                        - 0.5 * h * (p[c] + pj[c])
                        + (h2 / 24.0) * (Qq[c] - Ql[c])
                        + (h2 / 12.0) * (dVl[c] - dVq[c]))
    return out


def simpson_jacobian(double h,
                     const double[::1] ql, const double[::1] qm, const double[::1] q,
                     const double[:, ::1] Ml, const double[:, ::1] Mm, const double[:, ::1] Mq,
                     const double[:, :, ::1] dMl, const double[:, :, ::1] dMm, const double[:, :, ::1] dMq,
                     const double[:, :, :, ::1] d2Mm, const double[:, :, :, ::1] d2Mq,
                     const double[:, ::1] Km, const double[:, ::1] Kq):
    cdef Py_ssize_t n = ql.shape[0], c, d
    cdef double h2 = h * h
    cdef double Bl, Bm, Bq, Am, Aq, Cm, Cq, eye
    gl_, gm_, g_ = gear(h, ql, qm, q)
    cdef double[::1] gl = gl_, gm = gm_, g = g_
    out = np.zeros((3 * n, 3 * n))
    cdef double[:, ::1] J = out
    for c in range(n):
        for d in range(n):
            Bl = _grad(dMl, gl, c, d)
            Bm = _grad(dMm, gm, c, d)
            Bq = _grad(dMq, g, c, d)
            Am = _trans(dMm, gm, c, d)
            Aq = _trans(dMq, g, c, d)
            Cm = _curv(d2Mm, gm, c, d)
            Cq = _curv(d2Mq, g, c, d)
            eye = 1.0 if c == d else 0.0
            J[c, d] = -4.0 * (Mq[c, d] + Ml[c, d]) + h2 * Km[c, d] - 0.5 * h2 * Cm
            J[c, 2 * n + d] = 3.0 * Mq[c, d] + Ml[c, d] + h * Aq - h * Bm
            J[n + c, d] = (2.0 * h2 / 3.0) * Km[c, d] + (2.0 * h / 3.0) * (Bq - Bl) - (h2 / 3.0) * Cm
            J[n + c, n + d] = h * eye
            J[n + c, 2 * n + d] = ((h2 / 6.0) * Kq[c, d] + (h / 6.0) * Bl - (2.0 * h / 3.0) * Bm
                                   - 0.5 * h * Bq - (h2 / 12.0) * Cq)
            J[2 * n + c, d] = (2.0 / 3.0) * (Ml[c, d] - Mq[c, d]) + (2.0 * h / 3.0) * Am - (h / 3.0) * (Bl + Bq)
            J[2 * n + c, n + d] = -0.5 * h * eye
            J[2 * n + c, 2 * n + d] = (-Ml[c, d] / 6.0 + 2.0 * Mm[c, d] / 3.0 + 0.5 * Mq[c, d]
                                       + (h / 6.0) * Aq + (h / 12.0) * Bl + 0.25 * h * Bq
                                       + (h2 / 24.0) * Cq - (h2 / 12.0) * Kq[c, d])
    return out


def midpoint_residual(double h, const double[::1] ql, const double[::1] q,
                      const double[::1] pj, const double[::1] p,
                      const double[:, ::1] Mm, const double[:, :, ::1] dMm, const double[::1] dVm):
    cdef Py_ssize_t n = ql.shape[0], c
    cdef double[::1] g = np.empty(n), Q = np.empty(n)
    for c in range(n):
        g[c] = (q[c] - ql[c]) / h
    _quad(dMm, g, Q)
    out = np.empty(2 * n)
    cdef double[::1] F = out
    for c in range(n):
        F[c] = p[c] - pj[c] - 0.5 * h * Q[c] + h * dVm[c]
        F[n + c] = h * _mv(Mm, g, c) - 0.5 * h * (p[c] + pj[c])
    return out


def midpoint_jacobian(double h, const double[::1] ql, const double[::1] q,
                      const double[:, ::1] Mm, const double[:, :, ::1] dMm,
                      const double[:, :, :, ::1] d2Mm, const double[:, ::1] Km):
    cdef Py_ssize_t n = ql.shape[0], c, d
    cdef double[::1] g = np.empty(n)
    for c in range(n):
        g[c] = (q[c] - ql[c]) / h
    out = np.zeros((2 * n, 2 * n))
    cdef double[:, ::1] J = out
    for c in range(n):
        J[c, c] = 1.0
        J[n + c, c] = -0.5 * h
        for d in range(n):
            J[c, n + d] = 0.5 * h * Km[c, d] - 0.25 * h * _curv(d2Mm, g, c, d) - _grad(dMm, g, c, d)
            J[n + c, n + d] = Mm[c, d] + 0.5 * h * _trans(dMm, g, c, d)
    return out


def lu_solve(A, b):
    """Solve A x = b by Doolittle LU with partial pivoting on a private copy."""
    cdef double[:, ::1] a = np.array(A, dtype=np.float64, order="C", copy=True)
    x_ = np.array(b, dtype=np.float64, copy=True).reshape(-1)
    cdef double[::1] x = x_
    cdef Py_ssize_t n = a.shape[0], i, j, k, piv
    cdef double big, tmp, f
    if a.shape[1] != n or x.shape[0] != n:
        raise ValueError("lu_solve expects a square matrix and a matching right-hand side")
    for k in range(n):
        piv = k
        big = fabs(a[k, k])
        for i in range(k + 1, n):
            if fabs(a[i, k]) > big:
                big = fabs(a[i, k])
                piv = i
        if big == 0.0 or not isfinite(big):
            raise SolverError(f"singular matrix: zero pivot in column {k}")
        if piv != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[piv, j]
                a[piv, j] = tmp
            tmp = x[k]
            x[k] = x[piv]
            x[piv] = tmp
        for i in range(k + 1, n):
            f = a[i, k] / a[k, k]
            if f != 0.0:
                for j in range(k + 1, n):
                    a[i, j] -= f * a[k, j]
                x[i] -= f * x[k]
    for i in range(n - 1, -1, -1):
        tmp = x[i]
        for j in range(i + 1, n):
            tmp -= a[i, j] * x[j]
        x[i] = tmp / a[i, i]
        if not isfinite(x[i]):
            raise SolverError("linear solve produced non-finite values")
    return x_
