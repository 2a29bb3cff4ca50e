"""Runs and step-halving sweeps on the named presets.

Sweep members only exchange preset names and numbers, so they can be
farmed out to worker processes (``workers > 1``); results come back in
step-size order either way.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import (
    ConvergenceReport,
    convergence_order,
    cross_method_difference,
    energy_error_series,
    nutation_error_series,
    sup_norm,
)
from .baselines import midpoint_integrate, reduced_top_field, rk4_integrate, rk4_trajectory
from .elliptic import exact_nutation, nutation_cubic, nutation_period
from .errors import ContractError
from .model import PhasePoint
from .newton import NewtonConfig
from .simpson import Trajectory, integrate
from .systems import Preset, get_preset, preset_initial_state, top_conserved_momenta

INTEGRATORS = ("simpson", "midpoint", "rk4")


def initial_point(preset: Preset) -> PhasePoint:
    q0, p0 = preset_initial_state(preset)
    return PhasePoint(0.0, q0, p0)


def reference_cubic(preset: Preset):
    if not preset.is_top:
        raise ContractError(f"preset {preset.name!r} has no exact nutation reference")
    return nutation_cubic(preset.params, preset.q0, preset.qdot0)


def reference_period(preset: Preset) -> float:
    """Nutation period of a top preset, the unit for ``--h-frac`` and ``--periods``."""
    return nutation_period(reference_cubic(preset))


def run(preset: Preset, integrator: str, h: float, t_end: float, cfg: NewtonConfig = NewtonConfig()) -> Trajectory:
    start = initial_point(preset)
    if integrator == "simpson":
        return integrate(preset.model, start, h, t_end, cfg)
    if integrator == "midpoint":
        return midpoint_integrate(preset.model, start, h, t_end, cfg)
    if integrator == "rk4":
        return rk4_trajectory(preset.model, start, h, t_end)
    raise ContractError(f"unknown integrator {integrator!r}; choose from {', '.join(INTEGRATORS)}")


def _halved(h0, n_halvings):
    if n_halvings < 0:
        raise ContractError("n_halvings must be non-negative")
    return [h0 / 2**k for k in range(n_halvings + 1)]


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _nutation_norm(job):
    name, integrator, h, t_end, cfg = job
    preset = get_preset(name)
    cubic = reference_cubic(preset)
    traj = run(preset, integrator, h, t_end, cfg)
    return sup_norm(nutation_error_series(traj, lambda t: exact_nutation(cubic, t)))


def _energy_norm(job):
    name, integrator, h, t_end, cfg = job
    preset = get_preset(name)
    traj = run(preset, integrator, h, t_end, cfg)
    return sup_norm(energy_error_series(traj, preset.model))


def nutation_sweep(preset_name, integrator, h0, n_halvings, t_end, cfg=NewtonConfig(), workers=1) -> ConvergenceReport:
    """sup |e_theta| against the exact solution for h0, h0/2, ..."""
    steps = _halved(h0, n_halvings)
    norms = _map(_nutation_norm, [(preset_name, integrator, h, t_end, cfg) for h in steps], workers)
    return convergence_order(norms, steps, method=integrator, metric="nutation")


def energy_sweep(preset_name, integrator, h0, n_halvings, t_end, cfg=NewtonConfig(), workers=1) -> ConvergenceReport:
    """sup |e_H| for h0, h0/2, ..."""
    steps = _halved(h0, n_halvings)
    norms = _map(_energy_norm, [(preset_name, integrator, h, t_end, cfg) for h in steps], workers)
    return convergence_order(norms, steps, method=integrator, metric="energy")


def reduced_initial_state(preset: Preset):
    """(phi, theta, theta') initial state and the reduced-field constants of a top preset."""
    if not preset.is_top:
        raise ContractError("the reduced system is defined for top presets only")
    p_phi, p_psi = top_conserved_momenta(preset.params, preset.q0, preset.qdot0)
    A = preset.extra.get("A", preset.params.m)
    y0 = np.array([preset.q0[0], preset.q0[1], preset.qdot0[1]], dtype=float)
    return y0, dict(p_phi=float(p_phi), p_psi=float(p_psi), I=preset.params.I, A=float(A))


def reduced_rk4(preset: Preset, h, t_end):
    """RK4 on the reduced (phi, theta, xi) system; returns ``(times, states)``."""
    y0, consts = reduced_initial_state(preset)
    return rk4_integrate(reduced_top_field(**consts), 0.0, y0, h, t_end)


def _reduced_difference(job):
    name, integrator, h, t_end, cfg = job
    preset = get_preset(name)
    traj = run(preset, integrator, h, t_end, cfg)
    t, y = reduced_rk4(preset, h, t_end)
    return cross_method_difference(traj, t, y[:, 1])


def reduced_comparison(h0=0.1, n_halvings=4, horizon=1.0, preset_name="lagrange-top-table4",
                       integrator="simpson", cfg=NewtonConfig(), workers=1) -> ConvergenceReport:
    """sup |theta_full - theta_RK4,reduced| on matched grids for h0, h0/2, ..."""
    steps = _halved(h0, n_halvings)
    norms = _map(_reduced_difference, [(preset_name, integrator, h, horizon, cfg) for h in steps], workers)
    return convergence_order(norms, steps, method=f"{integrator}-vs-rk4-reduced", metric="nutation-difference")


def _theta_samples(job):
    name, integrator, h, t_end, cfg = job
    traj = run(get_preset(name), integrator, h, t_end, cfg)
    return traj.q[:, 1]


def self_convergence_sweep(preset_name, integrator, h0, n_halvings, t_end, cfg=NewtonConfig(),
                           workers=1) -> ConvergenceReport:
    """sup |theta_h - theta_{h/2}| on the coarse grid, without an exact reference."""
    steps = _halved(h0, n_halvings + 1)
    thetas = _map(_theta_samples, [(preset_name, integrator, h, t_end, cfg) for h in steps], workers)
    norms = [float(np.max(np.abs(coarse - fine[::2]))) for coarse, fine in zip(thetas[:-1], thetas[1:])]
    return convergence_order(norms, steps[:-1], method=integrator, metric="nutation-self")
