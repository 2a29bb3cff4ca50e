"""Self-checks run by ``simpvi validate``: model derivatives, step Jacobians,
elliptic identities and Gear-velocity exactness."""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .baselines import MidpointStepSystem
from .elliptic import carlson_rf, jacobi_sn
from .model import LagrangianModel, PhasePoint, validate_model
from .simpson import BLOCK_NAMES, SimpsonStepSystem, check_jacobian_blocks, gear_velocities
from .systems import Preset

MIDPOINT_BLOCK_NAMES = ("p", "q")
DERIVATIVES = ("dmass", "d2mass", "grad_potential", "hess_potential")


def corrupt_model(model: LagrangianModel, which: str, factor: float = 1.01) -> LagrangianModel:
    """Copy of ``model`` with one analytic derivative scaled by ``factor`` (negative control)."""
    if which not in DERIVATIVES:
        raise ValueError(f"cannot corrupt {which!r}; choose from {', '.join(DERIVATIVES)}")
    original = getattr(model, which)
    return dataclasses.replace(model, **{which: lambda q: factor * np.asarray(original(q))})


def sample_configurations(preset: Preset, count: int, rng) -> np.ndarray:
    """Configurations spread around the preset's start, away from chart singularities."""
    n = preset.model.n
    q = np.asarray(preset.q0, dtype=float) + rng.uniform(-1.0, 1.0, size=(count, n))
    if preset.is_top:
        q[:, 1] = rng.uniform(0.3, math.pi - 0.3, size=count)
    return q


def _step_size(preset: Preset) -> float:
    return 0.05 if preset.is_top else 0.1


def jacobian_suite(preset: Preset, method: str = "simpson", count: int = 20, seed: int = 0,
                   tolerance: float = 1e-5, model: LagrangianModel = None) -> dict:
    """Analytic step Jacobian against central differences at ``count`` random states."""
    model = model or preset.model
    rng = np.random.default_rng(seed)
    h = _step_size(preset)
    n = model.n
    names = BLOCK_NAMES if method == "simpson" else MIDPOINT_BLOCK_NAMES
    worst = np.zeros((len(names), len(names)))
    failing = set()
    for ql in sample_configurations(preset, count, rng):
        pj = model.mass(ql) @ rng.uniform(-1.0, 1.0, n)
        prev = PhasePoint(0.0, ql, pj)
        dq = h * rng.uniform(-1.0, 1.0, n)
        p = pj + h * rng.uniform(-1.0, 1.0, n) * np.maximum(1.0, np.abs(pj))
        if method == "simpson":
            system = SimpsonStepSystem(model, prev, h)
            x = np.concatenate([ql + 0.5 * dq, p, ql + dq])
        else:
            system = MidpointStepSystem(model, prev, h)
            x = np.concatenate([p, ql + dq])
        dev, bad = check_jacobian_blocks(system, x, tolerance)
        worst = np.maximum(worst, dev)
        failing |= bad
    return {
        "method": method,
        "states": count,
        "tolerance": tolerance,
        "max_block_deviation": {f"({names[i]},{names[j]})": float(worst[i, j])
                                for i in range(len(names)) for j in range(len(names))},
        "failing_blocks": sorted(f"({names[i]},{names[j]})" for i, j in failing),
        "passed": not failing,
    }


def elliptic_identities(count: int = 25, seed: int = 0, tolerance: float = 1e-12) -> dict:
    rng = np.random.default_rng(seed)
    x = rng.uniform(1e-3, 1e3, count)
    u = rng.uniform(-10.0, 10.0, count)
    checks = {
        "rf_symmetric": max(abs(carlson_rf(v, v, v) * math.sqrt(v) - 1.0) for v in x),
        "sn_k0_sin": max(abs(jacobi_sn(v, 0.0) - math.sin(v)) for v in u),
        "sn_k1_tanh": max(abs(jacobi_sn(v, 1.0) - math.tanh(v)) for v in u),
    }
    return {"deviations": checks, "tolerance": tolerance,
            "failures": [k for k, v in checks.items() if not v <= tolerance],
            "passed": all(v <= tolerance for v in checks.values())}


def gear_exactness(seed: int = 0, tolerance: float = 1e-10) -> dict:
    """Gear velocities reproduce the derivative of any quadratic at the three nodes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        a, b, c = rng.standard_normal((3, 3))
        t0, h = rng.uniform(-1, 1), rng.uniform(0.01, 1.0)
        q = lambda t: a + b * t + c * t * t  # noqa: E731
        dq = lambda t: b + 2 * c * t  # noqa: E731
        g = gear_velocities(q(t0), q(t0 + h / 2), q(t0 + h), h)
        for got, t in ((g.g_l, t0), (g.g_m, t0 + h / 2), (g.g, t0 + h)):
            worst = max(worst, float(np.max(np.abs(got - dq(t)))))
    return {"max_deviation": worst, "tolerance": tolerance, "passed": worst <= tolerance}


def validate_preset(preset: Preset, corrupt: str = None, count: int = 20, seed: int = 0) -> dict:
    model = corrupt_model(preset.model, corrupt) if corrupt else preset.model
    rng = np.random.default_rng(seed)
    model_report = validate_model(model, sample_configurations(preset, count, rng))
    jac = [jacobian_suite(preset, m, count, seed, model=model) for m in ("simpson", "midpoint")]
    failures = [f"model:{f}" for f in model_report.failures]
    for j in jac:
        failures += [f"jacobian:{j['method']}:{b}" for b in j["failing_blocks"]]
    return {
        "preset": preset.name,
        "corrupted": corrupt,
        "model": model_report.to_dict(),
        "jacobian": jac,
        "failures": failures,
        "passed": not failures,
    }
