"""Reference (numpy) implementation of the step kernels.

Each function receives model evaluations already computed by the caller and
assembles the scaled residual or its Jacobian.  ``_ckernels.pyx`` mirrors
these signatures exactly; :mod:`simpvi.kernels` picks one at import time.

Tensor contractions used below, for a velocity-like vector v::

    quad(dM, v)[c]     = dM[c, a, b] v_a v_b
    trans(dM, v)[c, d] = dM[d, c, b] v_b      (d/dq_d of M(q) v, v fixed)
    grad(dM, v)[c, d]  = dM[c, d, b] v_b      (1/2 d/dv_d of quad)
    curv(d2M, v)[c, d] = d2M[c, d, a, b] v_a v_b
"""
import numpy as np

from .errors import SolverError

NAME = "python"


def _quad(dM, v):
    return np.einsum("cab,a,b->c", dM, v, v)


def _trans(dM, v):
    return np.einsum("dcb,b->cd", dM, v)


def _grad(dM, v):
    return np.einsum("cdb,b->cd", dM, v)


def _curv(d2M, v):
    return np.einsum("cdab,a,b->cd", d2M, v, v)


def gear(h, ql, qm, q):
    gl = (-3.0 * ql + 4.0 * qm - q) / h
    gm = (q - ql) / h
    g = (ql - 4.0 * qm + 3.0 * q) / h
    return gl, gm, g


def simpson_residual(h, ql, qm, q, pj, p, Ml, Mm, Mq, dMl, dMm, dMq, dVl, dVm, dVq):
    gl, gm, g = gear(h, ql, qm, q)
    h2 = h * h
    Ql, Qm, Qq = _quad(dMl, gl), _quad(dMm, gm), _quad(dMq, g)
    F_mid = h * (Mq @ g) - h * (Ml @ gl) + h2 * dVm - 0.5 * h2 * Qm
    F_mom = (
        h * (p - pj)
        + h2 * (dVl / 6.0 + 2.0 * dVm / 3.0 + dVq / 6.0)
        - 0.5 * h2 * (Ql / 6.0 + 2.0 * Qm / 3.0 + Qq / 6.0)
    )
    F_cfg = (
        h * (Ml @ gl / 6.0 + 2.0 * (Mm @ gm) / 3.0 + Mq @ g / 6.0)
        - 0.5 * h * (p + pj)
        + (h2 / 24.0) * (Qq - Ql)
        + (h2 / 12.0) * (dVl - dVq)
    )
    return np.concatenate([F_mid, F_mom, F_cfg])


def simpson_jacobian(h, ql, qm, q, Ml, Mm, Mq, dMl, dMm, dMq, d2Mm, d2Mq, Km, Kq):
    n = ql.size
    gl, gm, g = gear(h, ql, qm, q)
    h2 = h * h
    eye = np.eye(n)
    Bl, Bm, Bq = _grad(dMl, gl), _grad(dMm, gm), _grad(dMq, g)
    Am, Aq = _trans(dMm, gm), _trans(dMq, g)
    Cm, Cq = _curv(d2Mm, gm), _curv(d2Mq, g)

    J = np.zeros((3 * n, 3 * n))
    m, pp, qq = slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n)
    J[m, m] = -4.0 * (Mq + Ml) + h2 * Km - 0.5 * h2 * Cm
    J[m, qq] = 3.0 * Mq + Ml + h * Aq - h * Bm
    J[pp, m] = (2.0 * h2 / 3.0) * Km + (2.0 * h / 3.0) * (Bq - Bl) - (h2 / 3.0) * Cm
    J[pp, pp] = h * eye
    J[pp, qq] = (h2 / 6.0) * Kq + (h / 6.0) * Bl - (2.0 * h / 3.0) * Bm - 0.5 * h * Bq - (h2 / 12.0) * Cq
    J[qq, m] = (2.0 / 3.0) * (Ml - Mq) + (2.0 * h / 3.0) * Am - (h / 3.0) * (Bl + Bq)
    J[qq, pp] = -0.5 * h * eye
    J[qq, qq] = (
        -Ml / 6.0 + 2.0 * Mm / 3.0 + 0.5 * Mq
        + (h / 6.0) * Aq + (h / 12.0) * Bl + 0.25 * h * Bq
        + (h2 / 24.0) * Cq - (h2 / 12.0) * Kq
    )
    return J


def midpoint_residual(h, ql, q, pj, p, Mm, dMm, dVm):
    g = (q - ql) / h
    F_mom = p - pj - 0.5 * h * _quad(dMm, g) + h * dVm
    F_cfg = h * (Mm @ g) - 0.5 * h * (p + pj)
    return np.concatenate([F_mom, F_cfg])


def midpoint_jacobian(h, ql, q, Mm, dMm, d2Mm, Km):
    n = ql.size
    g = (q - ql) / h
    J = np.zeros((2 * n, 2 * n))
    J[:n, :n] = np.eye(n)
    J[:n, n:] = 0.5 * h * Km - 0.25 * h * _curv(d2Mm, g) - _grad(dMm, g)
    J[n:, :n] = -0.5 * h * np.eye(n)
    J[n:, n:] = Mm + 0.5 * h * _trans(dMm, g)
    return J


def lu_solve(A, b):
    """Solve A x = b by LU with partial pivoting (LAPACK gesv)."""
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular matrix: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise SolverError("linear solve produced non-finite values")
    return x
