"""Lagrangian systems of the form L(q, qdot) = 1/2 qdot^T M(q) qdot - V(q).

A :class:`LagrangianModel` is a bundle of pure callbacks.  Every integrator
in the package consumes the mass matrix, its first and second derivatives,
the potential and its first and second derivatives; nothing else.

Index conventions for the derivative tensors::

    dmass(q)[c, a, b]     = d M_ab / d q_c
    d2mass(q)[c, d, a, b] = d^2 M_ab / d q_c d q_d
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, SingularMassError

Array = np.ndarray


@dataclass(frozen=True)
class LagrangianModel:
    """Callback bundle describing a mechanical system with ``n`` degrees of freedom.

    ``excluded`` optionally maps a configuration to a message when the
    configuration lies on a declared chart singularity, and ``None``
    otherwise.  ``cyclic`` lists coordinates whose conjugate momenta are
    conserved.
    """

    name: str
    n: int
    mass: Callable[[Array], Array]
    dmass: Callable[[Array], Array]
    d2mass: Callable[[Array], Array]
    potential: Callable[[Array], float]
    grad_potential: Callable[[Array], Array]
    hess_potential: Callable[[Array], Array]
    excluded: Optional[Callable[[Array], Optional[str]]] = None
    cyclic: tuple = ()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ContractError(f"degree-of-freedom count must be a positive integer, got {self.n}")

    def check_admissible(self, q):
        """Return a message if ``q`` is on an excluded submanifold, else ``None``."""
        if self.excluded is None:
            return None
        return self.excluded(q)


@dataclass(frozen=True)
class PhasePoint:
    """State of a one-step map: time, configuration and conjugate momentum."""

    t: float
    q: Array
    p: Array

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.shape != p.shape:
            raise ContractError(f"q has length {q.size} but p has length {p.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ContractError("phase point contains non-finite entries")
        q.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    def reversed(self) -> "PhasePoint":
        """Same configuration with the momentum flipped."""
        return PhasePoint(self.t, self.q, -self.p)


def as_coordinates(model: LagrangianModel, values, label="q") -> Array:
    """Validate a length-``n`` finite vector and return it as float64."""
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != model.n:
        raise ContractError(f"{label} has length {arr.size}, model {model.name!r} expects {model.n}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{label} contains non-finite entries")
    return arr


def lagrangian(model: LagrangianModel, q, qdot) -> float:
    """Evaluate 1/2 qdot^T M(q) qdot - V(q)."""
    q = as_coordinates(model, q)
    qdot = as_coordinates(model, qdot, "qdot")
    return 0.5 * qdot @ model.mass(q) @ qdot - model.potential(q)


def _solve_mass(model: LagrangianModel, q: Array, rhs: Array) -> Array:
    M = model.mass(q)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise SingularMassError(
            f"mass matrix of {model.name!r} is not positive definite at q={q}",
            condition=float(np.linalg.cond(M)),
        ) from None
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise SingularMassError(
            f"mass matrix of {model.name!r} is numerically singular at q={q} (cond={cond:.3e})",
            condition=cond,
        )
    y = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.T, y)


def velocity(model: LagrangianModel, q, p) -> Array:
    """Recover qdot = M(q)^{-1} p."""
    q = as_coordinates(model, q)
    p = as_coordinates(model, p, "p")
    return _solve_mass(model, q, p)


def energy(model: LagrangianModel, point: PhasePoint) -> float:
    """Hamiltonian 1/2 p^T M(q)^{-1} p + V(q)."""
    q = as_coordinates(model, point.q)
    p = as_coordinates(model, point.p, "p")
    return 0.5 * p @ _solve_mass(model, q, p) + model.potential(q)


def initial_momentum(model: LagrangianModel, q0, qdot0) -> Array:
    """Legendre transform p = M(q0) qdot0."""
    q0 = as_coordinates(model, q0)
    qdot0 = as_coordinates(model, qdot0, "qdot0")
    return model.mass(q0) @ qdot0


# ---------------------------------------------------------------------------
# self-validation


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_model`.

    ``deviations`` maps a check name to its maximum relative deviation over
    all samples; ``failures`` names the checks above ``tolerance``.
    """

    model: str
    tolerance: float
    deviations: dict = field(default_factory=dict)
    min_eigenvalue: float = np.inf
    max_condition: float = 0.0
    asymmetric: int = 0
    near_singular: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "tolerance": self.tolerance,
            "deviations": {k: float(v) for k, v in self.deviations.items()},
            "min_eigenvalue": float(self.min_eigenvalue),
            "max_condition": float(self.max_condition),
            "asymmetric_samples": self.asymmetric,
            "near_singular_samples": [list(map(float, q)) for q in self.near_singular],
            "failures": list(self.failures),
            "passed": self.passed,
        }


def relative_deviation(approx, exact, reference_scale=0.0) -> float:
    """max |approx - exact| scaled by the larger of the two magnitudes.

    ``reference_scale`` floors the scale; finite-difference checks pass the
    magnitude of the differentiated function so that derivatives which vanish
    at the sample are not judged against pure roundoff.
    """
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = max(np.max(np.abs(exact), initial=0.0), np.max(np.abs(approx), initial=0.0), reference_scale)
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(approx - exact)) / scale)


def central_difference(fun, q: Array, step: float) -> Array:
    """Stack d fun / d q_c along a new leading axis using central differences."""
    out = []
    for c in range(q.size):
        e = np.zeros_like(q)
        e[c] = step
        out.append((np.asarray(fun(q + e)) - np.asarray(fun(q - e))) / (2.0 * step))
    return np.stack(out)


def validate_model(
    model: LagrangianModel,
    samples: Sequence,
    fd_step: float = 1e-6,
    tolerance: float = 1e-6,
    singular_condition: float = 1e12,
) -> ValidationReport:
    """Check symmetry/definiteness of M and every analytic derivative against finite differences."""
    if fd_step <= 0:
        raise ContractError("fd_step must be positive")
    report = ValidationReport(model=model.name, tolerance=tolerance)
    worst = {"dmass": 0.0, "d2mass": 0.0, "grad_potential": 0.0, "hess_potential": 0.0,
             "dmass_symmetry": 0.0, "d2mass_symmetry": 0.0, "hess_symmetry": 0.0}
    for raw in samples:
        q = as_coordinates(model, raw)
        M = np.asarray(model.mass(q), dtype=float)
        if not np.array_equal(M, M.T):
            report.asymmetric += 1
        eig = np.linalg.eigvalsh(0.5 * (M + M.T))
        report.min_eigenvalue = min(report.min_eigenvalue, float(eig[0]))
        cond = float(eig[-1] / eig[0]) if eig[0] > 0 else np.inf
        report.max_condition = max(report.max_condition, cond)
        if cond > singular_condition:
            report.near_singular.append(q)

        dM = np.asarray(model.dmass(q), dtype=float)
        d2M = np.asarray(model.d2mass(q), dtype=float)
        K = np.asarray(model.hess_potential(q), dtype=float)
        mag = lambda a: float(np.max(np.abs(a), initial=0.0))  # noqa: E731
        checks = (
            ("dmass", model.mass, dM, mag(M)),
            ("d2mass", model.dmass, d2M, mag(dM)),
            ("grad_potential", model.potential, model.grad_potential(q), abs(float(model.potential(q)))),
            ("hess_potential", model.grad_potential, K, mag(model.grad_potential(q))),
        )
        for name, fun, analytic, ref in checks:
            fd = central_difference(fun, q, fd_step)
            worst[name] = max(worst[name], relative_deviation(fd, analytic, ref))
        worst["dmass_symmetry"] = max(worst["dmass_symmetry"], relative_deviation(dM, dM.transpose(0, 2, 1)))
        worst["d2mass_symmetry"] = max(
            worst["d2mass_symmetry"],
            relative_deviation(d2M, d2M.transpose(0, 1, 3, 2)),
            relative_deviation(d2M, d2M.transpose(1, 0, 2, 3)),
        )
        worst["hess_symmetry"] = max(worst["hess_symmetry"], relative_deviation(K, K.T))

    report.deviations = worst
    report.failures = [name for name, dev in worst.items() if not dev <= tolerance]
    if report.asymmetric:
        report.failures.append("mass_symmetry")
    if not report.min_eigenvalue > 0:
        report.failures.append("mass_positive_definite")
    return report
