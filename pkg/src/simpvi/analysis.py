"""Error series, conservation diagnostics and convergence-order estimates.

All series are sampled at interval endpoints only, so variational and RK4
trajectories are compared on the same grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ContractError
from .model import LagrangianModel, PhasePoint, energy
from .simpson import Trajectory

#: norms at or below this are treated as the double-precision floor
ROUNDOFF_FLOOR = 1e-12


@dataclass(frozen=True)
class ErrorSeries:
    """Relative (or, when flagged, absolute) error sampled at ``times``."""

    times: np.ndarray
    values: np.ndarray
    flag: Optional[str] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ContractError(f"times and values must be equal-length vectors, got {t.shape} and {v.shape}")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ContractError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def _relative(values, reference, label):
    if reference == 0.0:
        return values - reference, f"absolute: {label} is zero"
    return (values - reference) / reference, None


def energy_error_series(traj: Trajectory, model: LagrangianModel) -> ErrorSeries:
    """e_H = (H - H0)/H0 at every sample; absolute error when H0 = 0."""
    H = np.array([energy(model, PhasePoint(t, q, p)) for t, q, p in zip(traj.t, traj.q, traj.p)])
    values, flag = _relative(H, H[0], "H0")
    return ErrorSeries(traj.t, values, flag)


def momentum_error_series(traj: Trajectory, model: LagrangianModel, component_index: int) -> ErrorSeries:
    """Relative drift of the conjugate momentum of a cyclic coordinate."""
    if component_index not in model.cyclic:
        raise ContractError(
            f"coordinate {component_index} of {model.name!r} is not cyclic (cyclic: {tuple(model.cyclic)})"
        )
    p = traj.p[:, component_index]
    values, flag = _relative(p, p[0], f"p[{component_index}](0)")
    return ErrorSeries(traj.t, values, flag)


def nutation_error_series(traj: Trajectory, reference: Callable, index: int = 1) -> ErrorSeries:
    """e_theta = (theta - theta_ex)/theta_ex; samples where theta_ex = 0 are dropped and flagged."""
    exact = np.asarray(reference(traj.t), dtype=float)
    if exact.shape != traj.t.shape:
        raise ContractError("reference must return one value per sample time")
    theta = traj.q[:, index]
    keep = exact != 0.0
    flag = None if keep.all() else f"excluded {int((~keep).sum())} samples with zero reference"
    return ErrorSeries(traj.t[keep], (theta[keep] - exact[keep]) / exact[keep], flag)


def sup_norm(series: Union[ErrorSeries, np.ndarray]) -> float:
    values = series.values if isinstance(series, ErrorSeries) else np.asarray(series, dtype=float)
    if values.size == 0:
        raise ContractError("sup norm of an empty series")
    return float(np.max(np.abs(values)))


@dataclass(frozen=True)
class ConvergenceReport:
    """Norms at successively halved steps with pairwise and fitted orders.

    ``orders[k]`` compares rows k and k+1 and is NaN when either row is
    excluded (non-positive or below the roundoff floor).  ``slope`` is the
    least-squares fit of log(norm) against log(h) over the included rows.
    """

    step_sizes: np.ndarray
    norms: np.ndarray
    orders: np.ndarray
    slope: float
    excluded: np.ndarray
    method: str = ""
    metric: str = ""
    notes: list = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return bool(self.excluded.any())

    def rows(self):
        """(h, norm, order-from-previous-row) tuples; the first row has no order."""
        out = []
        for k, (h, e) in enumerate(zip(self.step_sizes, self.norms)):
            out.append((float(h), float(e), float(self.orders[k - 1]) if k else float("nan")))
        return out

    def to_dict(self):
        return {
            "method": self.method,
            "metric": self.metric,
            "step_sizes": self.step_sizes.tolist(),
            "norms": self.norms.tolist(),
            "orders": [None if np.isnan(a) else a for a in self.orders.tolist()],
            "slope": None if np.isnan(self.slope) else self.slope,
            "excluded": self.excluded.tolist(),
            "notes": list(self.notes),
        }


def convergence_order(norms, step_sizes=None, method="", metric="", floor=ROUNDOFF_FLOOR) -> ConvergenceReport:
    """Orders alpha_k = log2(e_k / e_{k+1}) for norms taken at halved steps.

    Without ``step_sizes`` the steps are taken as 1, 1/2, 1/4, ...
    """
    e = np.asarray(norms, dtype=float)
    if e.ndim != 1 or e.size < 1:
        raise ContractError("need a vector of at least one norm")
    if step_sizes is None:
        h = 0.5 ** np.arange(e.size)
    else:
        h = np.asarray(step_sizes, dtype=float)
        if h.shape != e.shape:
            raise ContractError("step_sizes and norms must have equal length")
        if np.any(h <= 0) or not np.allclose(h[1:], h[:-1] / 2.0, rtol=1e-9, atol=0.0):
            raise ContractError("step sizes must halve from row to row")
    excluded = ~(np.isfinite(e) & (e > floor))
    notes = []
    if excluded.any():
        notes.append(f"{int(excluded.sum())} norm(s) non-positive or below {floor:g} excluded from fits")
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(e[:-1] / e[1:]) / np.log2(h[:-1] / h[1:])
    orders[excluded[:-1] | excluded[1:]] = np.nan
    keep = ~excluded
    if keep.sum() >= 2:
        slope = float(np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0])
    else:
        slope = float("nan")
    return ConvergenceReport(h, e, orders, slope, excluded, method, metric, notes)


def cross_method_difference(traj_a: Trajectory, times_b, theta_b, index: int = 1) -> float:
    """sup_n |theta_a(t_n) - theta_b(t_n)| on a shared grid."""
    times_b = np.asarray(times_b, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    if times_b.shape != traj_a.t.shape or theta_b.shape != times_b.shape:
        raise ContractError(f"grid mismatch: {traj_a.t.shape} samples vs {times_b.shape}")
    scale = max(1.0, float(np.max(np.abs(times_b))) if times_b.size else 1.0)
    if not np.allclose(traj_a.t, times_b, rtol=0.0, atol=1e-9 * scale):
        raise ContractError("sample times do not align")
    return float(np.max(np.abs(traj_a.q[:, index] - theta_b)))


def half_drift_ratio(series: ErrorSeries) -> float:
    """max |e| over the second half of the run divided by max |e| over the first half."""
    n = len(series)
    if n < 3:
        raise ContractError("need at least three samples")
    mid = n // 2
    first = np.max(np.abs(series.values[: mid + 1]))
    second = np.max(np.abs(series.values[mid:]))
    return float(second / first) if first > 0 else (0.0 if second == 0 else float("inf"))


def tip_path(q) -> np.ndarray:
    """Unit symmetry-axis direction (cos phi sin theta, sin phi sin theta, cos theta) per sample."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    phi, theta = q[:, 0], q[:, 1]
    s = np.sin(theta)
    return np.column_stack([np.cos(phi) * s, np.sin(phi) * s, np.cos(theta)])


def detect_cusps(phidot, rel_tol: float = 0.05) -> np.ndarray:
    """Mask of samples where the precession rate has a near-zero local minimum in magnitude.

    Cusps of the axis trace happen where phi' vanishes at a nutation turning
    point; on a sampled trajectory the closest sample is a local minimum of
    |phi'| that is small relative to its peak.
    """
    a = np.abs(np.asarray(phidot, dtype=float))
    if a.size == 0:
        return np.zeros(0, dtype=bool)
    peak = a.max()
    if peak == 0.0:
        return np.ones(a.size, dtype=bool)
    left = np.concatenate([[np.inf], a[:-1]])
    right = np.concatenate([a[1:], [np.inf]])
    return (a <= left) & (a <= right) & (a <= rel_tol * peak)
