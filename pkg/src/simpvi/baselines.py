"""Reference integrators: implicit midpoint (variational) and classical RK4."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import kernels
from .errors import ContractError, SimpviError, SingularMassError, SingularityError, StepFailure
from .model import LagrangianModel, PhasePoint, as_coordinates
from .newton import NewtonConfig, fd_jacobian, solve
from .simpson import (
    StepStats,
    Trajectory,
    _NodeTensors,
    _check_domain,
    _check_h,
    select_fd_blocks,
    step_count,
)

# ---------------------------------------------------------------------------
# implicit midpoint


@dataclass(frozen=True)
class MidpointUnknowns:
    p: np.ndarray
    q: np.ndarray

    def pack(self):
        return np.concatenate([self.p, self.q]).astype(float)

    @classmethod
    def unpack(cls, x, n):
        x = np.asarray(x, dtype=float)
        if x.size != 2 * n:
            raise ContractError(f"expected {2 * n} unknowns, got {x.size}")
        return cls(x[:n].copy(), x[n:].copy())


class MidpointStepSystem:
    """Scaled residual [F_mom; F_cfg] of the midpoint rule, unknowns ordered (p, q).

    F_mom = p - p_j - (h/2) dM(q_m)[g, g] + h dV(q_m)
    F_cfg = h M(q_m) g - (h/2)(p + p_j)
    with q_m = (q_j + q)/2 and g = (q - q_j)/h.
    """

    blocks = 2

    def __init__(self, model: LagrangianModel, prev: PhasePoint, h: float, fd_blocks=None, fd_step=1e-7):
        _check_h(h)
        self.model = model
        self.n = model.n
        self.h = float(h)
        self.ql = np.ascontiguousarray(as_coordinates(model, prev.q))
        self.pj = np.ascontiguousarray(as_coordinates(model, prev.p, "p"))
        self.fd_blocks = frozenset(fd_blocks or ())
        self.fd_step = fd_step
        self._key = None
        self._mid = None
        self._second = False

    def _node(self, x, second):
        key = x.tobytes()
        if key != self._key or (second and not self._second):
            qm = np.ascontiguousarray(0.5 * (self.ql + x[self.n:]))
            self._mid = _NodeTensors(self.model, qm, "q_m", second)
            self._key, self._second = key, second
        return self._mid

    def residual(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        n = self.n
        mid = self._node(x, second=False)
        return kernels.active().midpoint_residual(
            self.h, self.ql, np.ascontiguousarray(x[n:]), self.pj, np.ascontiguousarray(x[:n]),
            mid.M, mid.dM, mid.dV,
        )

    def analytic_jacobian(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        mid = self._node(x, second=True)
        return kernels.active().midpoint_jacobian(
            self.h, self.ql, np.ascontiguousarray(x[self.n:]), mid.M, mid.dM, mid.d2M, mid.K,
        )

    def fd_jacobian(self, x):
        return fd_jacobian(self.residual, x, self.fd_step)

    def jacobian(self, x):
        J = self.analytic_jacobian(x)
        if self.fd_blocks:
            Jfd = self.fd_jacobian(x)
            n = self.n
            for bi, bj in self.fd_blocks:
                J[bi * n:(bi + 1) * n, bj * n:(bj + 1) * n] = Jfd[bi * n:(bi + 1) * n, bj * n:(bj + 1) * n]
        return J


def midpoint_residual(model: LagrangianModel, prev: PhasePoint, u: MidpointUnknowns, h) -> np.ndarray:
    return MidpointStepSystem(model, prev, h).residual(u.pack())


def midpoint_jacobian(model: LagrangianModel, prev: PhasePoint, u: MidpointUnknowns, h) -> np.ndarray:
    return MidpointStepSystem(model, prev, h).analytic_jacobian(u.pack())


def midpoint_step(model: LagrangianModel, prev: PhasePoint, h: float, cfg: NewtonConfig = NewtonConfig(),
                  fd_blocks=None):
    """One implicit-midpoint step; returns ``(next_point, stats)``."""
    _check_domain(model, prev.q, "start of step")
    system = MidpointStepSystem(model, prev, h, fd_blocks=fd_blocks, fd_step=cfg.fd_step)
    if cfg.predictor == "extrapolate":
        qdot = np.linalg.solve(model.mass(prev.q), prev.p)
        x0 = np.concatenate([prev.p, prev.q + h * qdot])
    else:
        x0 = np.concatenate([prev.p, prev.q])
    outcome = solve(system.residual, system.jacobian, x0, cfg)
    if not outcome.converged:
        raise StepFailure(
            f"midpoint step from t={prev.t} did not converge in {cfg.max_iterations} iterations "
            f"(residual {outcome.residual_norm:.3e})",
            residual_norm=outcome.residual_norm,
        )
    u = MidpointUnknowns.unpack(outcome.solution, model.n)
    _check_domain(model, u.q, "end of step")
    source = "finite-difference" if (system.fd_blocks or outcome.used_fd_jacobian) else "analytic"
    return PhasePoint(prev.t + h, u.q, u.p), StepStats(outcome.iterations, outcome.residual_norm, source)


def midpoint_integrate(model: LagrangianModel, initial: PhasePoint, h: float, t_end: float,
                       cfg: NewtonConfig = NewtonConfig(), validate_jacobian: bool = True) -> Trajectory:
    N = step_count(initial.t, t_end, h)
    n = model.n
    fd_blocks = set()
    if validate_jacobian and N > 0:
        fd_blocks = select_fd_blocks(lambda pt, hh: MidpointStepSystem(model, pt, hh, fd_step=cfg.fd_step),
                                     initial, h, cfg)
    t = initial.t + h * np.arange(N + 1)
    q = np.empty((N + 1, n))
    p = np.empty((N + 1, n))
    q[0], p[0] = initial.q, initial.p
    stats: List[StepStats] = []
    current = initial
    for j in range(N):
        try:
            nxt, st = midpoint_step(model, current, h, cfg, fd_blocks)
        except SimpviError as exc:  # keep the steps already taken
            mids = 0.5 * (q[:j] + q[1:j + 1])
            exc.trajectory = Trajectory(model.name, "midpoint", h, t[: j + 1].copy(), q[: j + 1].copy(),
                                        p[: j + 1].copy(), mids, stats)
            raise
        q[j + 1], p[j + 1] = nxt.q, nxt.p
        stats.append(st)
        current = PhasePoint(t[j + 1], nxt.q, nxt.p)
    return Trajectory(model.name, "midpoint", h, t, q, p, 0.5 * (q[:-1] + q[1:]), stats)


# ---------------------------------------------------------------------------
# first-order fields and RK4


@dataclass(frozen=True)
class FirstOrderField:
    dimension: int
    eval: Callable[[float, np.ndarray], np.ndarray]
    name: str = "field"

    def __call__(self, t, y):
        out = np.asarray(self.eval(t, y), dtype=float)
        if out.shape != (self.dimension,):
            raise ContractError(f"field {self.name!r} returned shape {out.shape}, expected ({self.dimension},)")
        return out


def hamiltonian_field(model: LagrangianModel) -> FirstOrderField:
    """Canonical equations for H = 1/2 p^T M(q)^-1 p + V(q), state y = [q; p]."""
    n = model.n

    def rhs(t, y):
        q, p = y[:n], y[n:]
        try:
            v = np.linalg.solve(model.mass(q), p)
        except np.linalg.LinAlgError:
            raise SingularMassError(f"mass matrix of {model.name!r} singular at q={q}") from None
        pdot = 0.5 * np.einsum("cab,a,b->c", model.dmass(q), v, v) - model.grad_potential(q)
        return np.concatenate([v, pdot])

    return FirstOrderField(2 * n, rhs, f"hamiltonian:{model.name}")


REDUCED_P_PHI = 2.0 * np.pi * np.sqrt(3.0)
REDUCED_P_PSI = 4.0 * np.pi
REDUCED_A = 4.0 * np.pi**2


def reduced_precession_rate(theta, p_phi=REDUCED_P_PHI, p_psi=REDUCED_P_PSI, I=1.0):
    s = np.sin(theta)
    return (p_phi - p_psi * np.cos(theta)) / (I * s * s)


def reduced_top_field(p_phi=REDUCED_P_PHI, p_psi=REDUCED_P_PSI, I=1.0, A=REDUCED_A, guard=1e-10) -> FirstOrderField:
    """Nutation of the top with the cyclic momenta eliminated, state y = (phi, theta, xi).

    phi' = (p_phi - p_psi cos theta) / (I sin^2 theta)
    theta' = xi
    xi' = (A + phi'^2 cos theta - (p_psi / I) phi') sin theta
    """

    def rhs(t, y):
        theta, xi = y[1], y[2]
        s = np.sin(theta)
        if abs(s) < guard:
            raise SingularityError(f"reduced top field: |sin(theta)| = {abs(s):.3e} below guard {guard}")
        c = np.cos(theta)
        dphi = (p_phi - p_psi * c) / (I * s * s)
        return np.array([dphi, xi, (A + dphi * dphi * c - (p_psi / I) * dphi) * s])

    return FirstOrderField(3, rhs, "reduced-lagrange-top")


def rk4_step(field: FirstOrderField, t, y, h):
    """Classical four-stage Runge-Kutta update."""
    _check_h(h)
    y = np.asarray(y, dtype=float)
    k1 = field(t, y)
    k2 = field(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = field(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(field: FirstOrderField, t0, y0, h, t_end):
    """Fixed-step RK4 on a whole number of steps; returns ``(times, states)``."""
    N = step_count(t0, t_end, h)
    y = np.empty((N + 1, field.dimension))
    y[0] = y0
    t = t0 + h * np.arange(N + 1)
    for j in range(N):
        y[j + 1] = rk4_step(field, t[j], y[j], h)
    return t, y


def rk4_trajectory(model: LagrangianModel, initial: PhasePoint, h, t_end) -> Trajectory:
    """RK4 on the canonical equations, packaged like the variational trajectories."""
    n = model.n
    t, y = rk4_integrate(hamiltonian_field(model), initial.t, np.concatenate([initial.q, initial.p]), h, t_end)
    return Trajectory(model.name, "rk4", h, t, y[:, :n].copy(), y[:, n:].copy(), np.empty((0, n)), [])
