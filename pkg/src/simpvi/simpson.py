"""Fourth-order Simpson variational integrator.

Each step interpolates the configuration with quadratic Lagrange elements on
[t_j, t_j + h] (nodes q_l, q_m, q), integrates the Lagrangian with Simpson's
rule and imposes the discrete Euler-Lagrange equations.  The unknowns of a
step are the midpoint configuration q_m, the right momentum p and the right
configuration q; they solve F(q_m, p, q) = 0 where, all equations scaled by h,

* F_mid  : stationarity of the discrete action with respect to q_m,
* F_mom  : p - p_j equals the Simpson average of the generalized forces,
* F_cfg  : (p + p_j)/2 equals the Simpson average of M g plus O(h^2)
  end-point corrections.

Method notes
------------
With L_d(q_l, q_m, q) the discrete Lagrangian, write P_L = -dL_d/dq_l,
D = dL_d/dq_m and P_R = dL_d/dq (see :func:`discrete_momenta`).  The scheme
is p_j = P_L, D = 0, p_{j+1} = P_R, packaged as

* F_mid = -(3/2) h D,
* F_mom = h (p - p_j - (P_R - P_L + D)), where P_R - P_L + D holds only
  force terms,
* F_cfg = h ((P_L + P_R)/2 - (p + p_j)/2).  Its end-point corrections carry
  the weights h^2/24 on mass derivatives and h^2/12 on potential gradients.
  Doubling them keeps the scheme consistent but drops it to second order.

Adding (1/2) dL_d/dq_m to p_{j+1} yields the Simpson-weighted right momentum
1/6 M_l g_l + 2/3 M_m g_m + 1/6 M g + (h/6) dM_m[g_m, g_m]
+ (h/12) dM[g, g] - (h/3) dV_m - (h/6) dV.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .errors import (
    ContractError,
    DomainError,
    ModelEvaluationError,
    SimpviError,
    SingularityError,
    StepFailure,
)
from .model import LagrangianModel, PhasePoint, as_coordinates
from .newton import NewtonConfig, fd_jacobian, solve

BLOCK_NAMES = ("q_m", "p", "q")


def basis_p2(theta):
    """Quadratic Lagrange basis on [0, 1] with nodes 0, 1/2, 1."""
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    return ((1.0 - theta) * (1.0 - 2.0 * theta), 4.0 * theta * (1.0 - theta), theta * (2.0 * theta - 1.0))


@dataclass(frozen=True)
class GearVelocities:
    g_l: np.ndarray
    g_m: np.ndarray
    g: np.ndarray


def _check_h(h):
    if not h > 0:
        raise DomainError(f"step size must be positive, got {h}")


def gear_velocities(q_l, q_m, q, h) -> GearVelocities:
    """Velocities of the quadratic interpolant at the left node, midpoint and right node."""
    _check_h(h)
    q_l, q_m, q = (np.asarray(v, dtype=float) for v in (q_l, q_m, q))
    return GearVelocities(
        g_l=(-3.0 * q_l + 4.0 * q_m - q) / h,
        g_m=(q - q_l) / h,
        g=(q_l - 4.0 * q_m + 3.0 * q) / h,
    )


def discrete_lagrangian(model: LagrangianModel, q_l, q_m, q, h) -> float:
    """Simpson quadrature of the Lagrangian along the quadratic interpolant."""
    _check_h(h)
    g = gear_velocities(q_l, q_m, q, h)
    kinetic = (
        g.g_l @ model.mass(q_l) @ g.g_l / 6.0
        + 2.0 * (g.g_m @ model.mass(q_m) @ g.g_m) / 3.0
        + g.g @ model.mass(q) @ g.g / 6.0
    )
    potential = model.potential(q_l) / 6.0 + 2.0 * model.potential(q_m) / 3.0 + model.potential(q) / 6.0
    return 0.5 * h * kinetic - h * potential


def action_sum(model: LagrangianModel, configs, midpoints, h) -> float:
    """Sum of discrete Lagrangians over consecutive intervals."""
    configs = np.asarray(configs, dtype=float)
    midpoints = np.asarray(midpoints, dtype=float)
    if len(midpoints) != len(configs) - 1:
        raise ContractError("need exactly one midpoint per interval")
    return float(sum(discrete_lagrangian(model, configs[j], midpoints[j], configs[j + 1], h)
                     for j in range(len(midpoints))))


def discrete_momenta(model: LagrangianModel, q_l, q_m, q, h):
    """Return (-dL_d/dq_l, dL_d/dq_m, dL_d/dq) in closed form."""
    _check_h(h)
    q_l, q_m, q = (np.asarray(v, dtype=float) for v in (q_l, q_m, q))
    v = gear_velocities(q_l, q_m, q, h)
    Ml, Mm, Mq = model.mass(q_l), model.mass(q_m), model.mass(q)
    quad = lambda dM, w: np.einsum("cab,a,b->c", dM, w, w)  # noqa: E731
    Ql, Qm, Qq = quad(model.dmass(q_l), v.g_l), quad(model.dmass(q_m), v.g_m), quad(model.dmass(q), v.g)
    dVl, dVm, dVq = model.grad_potential(q_l), model.grad_potential(q_m), model.grad_potential(q)
    left = 0.5 * Ml @ v.g_l + 2.0 * (Mm @ v.g_m) / 3.0 - Mq @ v.g / 6.0 - h * Ql / 12.0 + h * dVl / 6.0
    middle = 2.0 * (Ml @ v.g_l - Mq @ v.g) / 3.0 + h * Qm / 3.0 - 2.0 * h * dVm / 3.0
    right = -Ml @ v.g_l / 6.0 + 2.0 * (Mm @ v.g_m) / 3.0 + 0.5 * Mq @ v.g + h * Qq / 12.0 - h * dVq / 6.0
    return left, middle, right


@dataclass(frozen=True)
class StepUnknowns:
    q_m: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def pack(self) -> np.ndarray:
        return np.concatenate([self.q_m, self.p, self.q]).astype(float)

    @classmethod
    def unpack(cls, x, n) -> "StepUnknowns":
        x = np.asarray(x, dtype=float)
        if x.size != 3 * n:
            raise ContractError(f"expected {3 * n} unknowns, got {x.size}")
        return cls(x[:n].copy(), x[n:2 * n].copy(), x[2 * n:].copy())


@dataclass(frozen=True)
class StepStats:
    newton_iterations: int
    final_residual_norm: float
    jacobian_source: str = "analytic"


def _evaluate(fun, q, node, what):
    try:
        out = np.ascontiguousarray(fun(q), dtype=float)
    except Exception as exc:
        raise ModelEvaluationError(f"{what} failed at {node} = {q}: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise ModelEvaluationError(f"{what} returned non-finite values at {node} = {q}")
    return out


class _NodeTensors:
    """Model evaluations at a single configuration, labelled for error messages."""

    __slots__ = ("M", "dM", "d2M", "dV", "K")

    def __init__(self, model, q, node, second=True):
        self.M = _evaluate(model.mass, q, node, "mass")
        self.dM = _evaluate(model.dmass, q, node, "dmass")
        self.dV = _evaluate(model.grad_potential, q, node, "grad_potential")
        if second:
            self.d2M = _evaluate(model.d2mass, q, node, "d2mass")
            self.K = _evaluate(model.hess_potential, q, node, "hess_potential")


class SimpsonStepSystem:
    """Residual and Jacobian of one step with the left state frozen.

    Tensors at the left node are evaluated once; tensors at (q_m, q) are
    cached for the most recent unknown vector so that the residual and the
    Jacobian of a Newton iteration share model evaluations.
    """

    blocks = 3

    def __init__(self, model: LagrangianModel, prev: PhasePoint, h: float, fd_blocks=None, fd_step=1e-7):
        _check_h(h)
        self.model = model
        self.n = model.n
        self.h = float(h)
        self.ql = np.ascontiguousarray(as_coordinates(model, prev.q))
        self.pj = np.ascontiguousarray(as_coordinates(model, prev.p, "p"))
        self.left = _NodeTensors(model, self.ql, "q_l", second=False)
        self.fd_blocks = frozenset(fd_blocks or ())
        self.fd_step = fd_step
        self._key = None
        self._mid = self._right = None
        self._second = False

    def _nodes(self, x, second):
        key = x.tobytes()
        if key != self._key or (second and not self._second):
            n = self.n
            self._mid = _NodeTensors(self.model, np.ascontiguousarray(x[:n]), "q_m", second)
            self._right = _NodeTensors(self.model, np.ascontiguousarray(x[2 * n:]), "q", second)
            self._key, self._second = key, second
        return self._mid, self._right

    def residual(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        n = self.n
        mid, right = self._nodes(x, second=False)
        L = self.left
        return kernels.active().simpson_residual(
            self.h, self.ql, x[:n], x[2 * n:], self.pj, np.ascontiguousarray(x[n:2 * n]),
            L.M, mid.M, right.M, L.dM, mid.dM, right.dM, L.dV, mid.dV, right.dV,
        )

    def analytic_jacobian(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        n = self.n
        mid, right = self._nodes(x, second=True)
        L = self.left
        return kernels.active().simpson_jacobian(
            self.h, self.ql, x[:n], x[2 * n:],
            L.M, mid.M, right.M, L.dM, mid.dM, right.dM, mid.d2M, right.d2M, mid.K, right.K,
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


def residual(model: LagrangianModel, prev: PhasePoint, u: StepUnknowns, h) -> np.ndarray:
    """Stacked [F_mid; F_mom; F_cfg] at the unknowns ``u``."""
    return SimpsonStepSystem(model, prev, h).residual(u.pack())


def jacobian_analytic(model: LagrangianModel, prev: PhasePoint, u: StepUnknowns, h) -> np.ndarray:
    """Closed-form 3n x 3n Jacobian of :func:`residual` with respect to (q_m, p, q)."""
    return SimpsonStepSystem(model, prev, h).analytic_jacobian(u.pack())


def jacobian_fd(model: LagrangianModel, prev: PhasePoint, u: StepUnknowns, h, fd_step=1e-7) -> np.ndarray:
    return SimpsonStepSystem(model, prev, h, fd_step=fd_step).fd_jacobian(u.pack())


def block_deviations(analytic, reference, n, blocks=3):
    """Relative deviation of every n x n block, scaled by the whole reference matrix.

    Blocks whose entries are identically zero in both matrices report 0.
    """
    scale = max(np.max(np.abs(reference)), np.max(np.abs(analytic)), np.finfo(float).tiny)
    out = np.zeros((blocks, blocks))
    for i in range(blocks):
        for j in range(blocks):
            a = analytic[i * n:(i + 1) * n, j * n:(j + 1) * n]
            r = reference[i * n:(i + 1) * n, j * n:(j + 1) * n]
            out[i, j] = np.max(np.abs(a - r)) / scale
    return out


def check_jacobian_blocks(system, x, tolerance=1e-5):
    """Compare analytic blocks to finite differences; return (deviations, failing block set)."""
    dev = block_deviations(system.analytic_jacobian(x), system.fd_jacobian(x), system.n, blocks=system.blocks)
    failing = {(i, j) for i in range(dev.shape[0]) for j in range(dev.shape[1]) if not dev[i, j] <= tolerance}
    return dev, failing


@dataclass
class Trajectory:
    """Endpoint samples of a fixed-step run.

    ``q`` and ``p`` have one row per sample time ``t``.  ``midpoints`` holds
    the interior configuration of each interval when the method has one.
    """

    model_name: str
    method: str
    h: float
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    midpoints: np.ndarray
    stats: List[StepStats] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    @property
    def points(self) -> List[PhasePoint]:
        return [PhasePoint(t, q, p) for t, q, p in zip(self.t, self.q, self.p)]

    def point(self, k) -> PhasePoint:
        return PhasePoint(self.t[k], self.q[k], self.p[k])

    @property
    def final(self) -> PhasePoint:
        return self.point(-1)

    @property
    def newton_iterations(self) -> np.ndarray:
        return np.array([s.newton_iterations for s in self.stats], dtype=int)


def _initial_guess(model, prev, h, cfg):
    if cfg.predictor == "extrapolate":
        qdot = np.linalg.solve(model.mass(prev.q), prev.p)
        return np.concatenate([prev.q + 0.5 * h * qdot, prev.p, prev.q + h * qdot])
    return np.concatenate([prev.q, prev.p, prev.q])


def _check_domain(model, q, where):
    message = model.check_admissible(q)
    if message is not None:
        raise SingularityError(f"{model.name}: {where} outside admissible domain ({message})")


def step(model: LagrangianModel, prev: PhasePoint, h: float, cfg: NewtonConfig = NewtonConfig(),
         fd_blocks=None):
    """Advance ``prev`` by one Simpson step.

    Returns ``(next_point, midpoint, stats)``.  ``fd_blocks`` lists
    (row, column) Jacobian blocks to replace by finite differences.
    """
    _check_domain(model, prev.q, "start of step")
    system = SimpsonStepSystem(model, prev, h, fd_blocks=fd_blocks, fd_step=cfg.fd_step)
    outcome = solve(system.residual, system.jacobian, _initial_guess(model, prev, h, cfg), cfg)
    if not outcome.converged:
        raise StepFailure(
            f"Simpson step from t={prev.t} did not converge in {cfg.max_iterations} iterations "
            f"(residual {outcome.residual_norm:.3e})",
            residual_norm=outcome.residual_norm,
        )
    u = StepUnknowns.unpack(outcome.solution, model.n)
    _check_domain(model, u.q, "end of step")
    source = "finite-difference" if (system.fd_blocks or outcome.used_fd_jacobian) else "analytic"
    stats = StepStats(outcome.iterations, outcome.residual_norm, source)
    return PhasePoint(prev.t + h, u.q, u.p), u.q_m, stats


def step_count(t0, t_end, h):
    _check_h(h)
    if t_end < t0:
        raise ContractError(f"t_end = {t_end} precedes the initial time {t0}")
    ratio = (t_end - t0) / h
    N = int(round(ratio))
    if abs(ratio - N) > 1e-9 * max(1.0, ratio):
        raise ContractError(f"(t_end - t0)/h = {ratio!r} is not a whole number of steps")
    return N


def select_fd_blocks(system_factory, initial: PhasePoint, h, cfg: NewtonConfig, tolerance=1e-5):
    """Validate the analytic Jacobian at a perturbed state near ``initial``.

    Returns the set of blocks that fail and must be replaced by finite
    differences for the run.
    """
    system = system_factory(initial, h)
    n = system.n
    rng = np.random.default_rng(0)
    x = np.concatenate([initial.q, initial.p, initial.q])[: system.blocks * n]
    x = x + 1e-3 * rng.standard_normal(x.size) * np.maximum(1.0, np.abs(x))
    _, failing = check_jacobian_blocks(system, x, tolerance)
    return failing


def integrate(model: LagrangianModel, initial: PhasePoint, h: float, t_end: float,
              cfg: NewtonConfig = NewtonConfig(), validate_jacobian: bool = True) -> Trajectory:
    """Run the Simpson integrator on a whole number of steps from ``initial.t`` to ``t_end``."""
    N = step_count(initial.t, t_end, h)
    n = model.n
    fd_blocks = set()
    if validate_jacobian and N > 0:
        fd_blocks = select_fd_blocks(lambda pt, hh: SimpsonStepSystem(model, pt, hh, fd_step=cfg.fd_step),
                                     initial, h, cfg)
    t = initial.t + h * np.arange(N + 1)
    q = np.empty((N + 1, n))
    p = np.empty((N + 1, n))
    mids = np.empty((N, n))
    q[0], p[0] = initial.q, initial.p
    stats: List[StepStats] = []
    current = initial
    for j in range(N):
        try:
            nxt, qm, st = step(model, current, h, cfg, fd_blocks)
        except SimpviError as exc:  # keep the steps already taken
            exc.trajectory = Trajectory(model.name, "simpson", h, t[: j + 1].copy(), q[: j + 1].copy(),
                                        p[: j + 1].copy(), mids[:j].copy(), stats)
            raise
        q[j + 1], p[j + 1], mids[j] = nxt.q, nxt.p, qm
        stats.append(st)
        current = PhasePoint(t[j + 1], nxt.q, nxt.p)
    return Trajectory(model.name, "simpson", h, t, q, p, mids, stats)
