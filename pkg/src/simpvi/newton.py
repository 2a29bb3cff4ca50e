"""Damped Newton iteration for small square nonlinear systems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError, SolverError


@dataclass(frozen=True)
class NewtonConfig:
    """Settings shared by every implicit stepper.

    ``tolerance`` bounds the infinity norm of the residual.  With
    ``damping < 1`` a monotone safeguard halves the step whenever the
    residual would grow.  ``predictor`` selects the per-step initial guess
    of the integrators: ``"hold"`` starts from the previous state,
    ``"extrapolate"`` from a constant-velocity prediction.

    ``polish`` adds one full Newton update once the tolerance is met (kept
    only if it does not raise the residual).  The tolerance is absolute, and
    a system whose residual entries are small (light bodies, short steps)
    otherwise stops with per-step errors that accumulate over a run.
    """

    tolerance: float = 1e-12
    max_iterations: int = 50
    damping: float = 1.0
    fd_fallback: bool = True
    fd_step: float = 1e-7
    predictor: str = "hold"
    polish: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ContractError("tolerance must be positive")
        if not self.fd_step > 0:
            raise ContractError("fd_step must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ContractError("damping must lie in (0, 1]")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ContractError("max_iterations must be a positive integer")
        if self.predictor not in ("hold", "extrapolate"):
            raise ContractError(f"unknown predictor {self.predictor!r}")


@dataclass
class NewtonOutcome:
    solution: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    used_fd_jacobian: bool = False
    polished: bool = False


def fd_jacobian(residual_fn, x, step=1e-7, f0=None):
    """Central-difference Jacobian with steps scaled to ``max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    J = None
    for i in range(n):
        dx = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += dx
        xm[i] -= dx
        col = (np.asarray(residual_fn(xp)) - np.asarray(residual_fn(xm))) / (2.0 * dx)
        if J is None:
            J = np.empty((col.size, n))
        J[:, i] = col
    return J


def _norm(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def _direction(residual_fn, jacobian_fn, x, F, cfg, iteration):
    """Newton direction and whether the finite-difference retry was needed."""
    J = np.asarray(jacobian_fn(x), dtype=float)
    try:
        return kernels.active().lu_solve(J, -F), False
    except SolverError:
        if not cfg.fd_fallback:
            raise
    try:
        return kernels.active().lu_solve(fd_jacobian(residual_fn, x, cfg.fd_step), -F), True
    except SolverError as exc:
        raise SolverError(f"Jacobian singular at iteration {iteration} (finite-difference retry failed)") from exc


def solve(residual_fn, jacobian_fn, x0, cfg: NewtonConfig = NewtonConfig()) -> NewtonOutcome:
    """Iterate x <- x + damping * dx with J(x) dx = -F(x).

    Stops as soon as ``|F(x)|_inf <= cfg.tolerance`` (checked before every
    update, so an exact starting point costs zero iterations), then applies
    the optional polishing update, which is not counted in ``iterations``.
    Failing to converge is reported through ``NewtonOutcome.converged``; only
    a singular Jacobian with no usable fallback raises :class:`SolverError`.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    F = np.asarray(residual_fn(x), dtype=float)
    norm = _norm(F)
    used_fd = False
    iterations = 0
    while norm > cfg.tolerance and iterations < cfg.max_iterations:
        if not np.isfinite(norm):
            break
        dx, fd = _direction(residual_fn, jacobian_fn, x, F, cfg, iterations)
        used_fd |= fd
        iterations += 1
        lam = cfg.damping
        x_new = x + lam * dx
        F_new = np.asarray(residual_fn(x_new), dtype=float)
        norm_new = _norm(F_new)
        if lam < 1.0:
            halvings = 0
            while not norm_new <= norm and halvings < 30:
                lam *= 0.5
                halvings += 1
                x_new = x + lam * dx
                F_new = np.asarray(residual_fn(x_new), dtype=float)
                norm_new = _norm(F_new)
        x, F, norm = x_new, F_new, norm_new
    converged = bool(norm <= cfg.tolerance)
    polished = False
    if converged and cfg.polish and norm > 0.0:
        try:
            dx, fd = _direction(residual_fn, jacobian_fn, x, F, cfg, iterations)
        except SolverError:
            dx = None
        if dx is not None:
            x_new = x + dx
            norm_new = _norm(np.asarray(residual_fn(x_new), dtype=float))
            if norm_new <= norm:
                x, norm, polished = x_new, norm_new, True
                used_fd |= fd
    return NewtonOutcome(
        solution=x,
        iterations=iterations,
        residual_norm=norm,
        converged=converged,
        used_fd_jacobian=used_fd,
        polished=polished,
    )
