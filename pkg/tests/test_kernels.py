import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simpvi import kernels
from simpvi.baselines import MidpointStepSystem
from simpvi.errors import SolverError
from simpvi.experiments import initial_point, run
from simpvi.model import PhasePoint
from simpvi.simpson import SimpsonStepSystem
from simpvi.systems import PRESETS

needs_ext = pytest.mark.skipif("cython" not in kernels.available(), reason="extension not built")


def _with(backend, fn):
    previous = kernels.set_backend(backend)
    try:
        return fn()
    finally:
        kernels.set_backend(previous)


def _random_states(preset, rng, count=10):
    n = preset.model.n
    for _ in range(count):
        ql = preset.q0 + rng.uniform(-0.4, 0.4, n)
        prev = PhasePoint(0.0, ql, preset.model.mass(ql) @ rng.uniform(-3, 3, n))
        h = rng.uniform(0.005, 0.1)
        yield prev, h, rng.uniform(-0.05, 0.05, 3 * n)


def test_python_backend_always_available():
    assert "python" in kernels.available()
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_set_backend_returns_previous(backend):
    assert kernels.backend_name() == backend
    prev = kernels.set_backend("python")
    assert prev == backend
    kernels.set_backend(prev)


@needs_ext
@pytest.mark.parametrize("name", sorted(PRESETS))
def test_simpson_kernels_agree(name):
    preset = PRESETS[name]
    rng = np.random.default_rng(11)
    n = preset.model.n
    for prev, h, dx in _random_states(preset, rng):
        x = np.concatenate([prev.q, prev.p, prev.q]) + dx
        x[2 * n:] += dx[:n]
        out = {}
        for be in ("python", "cython"):
            system = SimpsonStepSystem(preset.model, prev, h)
            out[be] = _with(be, lambda: (system.residual(x), system.analytic_jacobian(x)))
        scale_F = max(1.0, np.max(np.abs(out["python"][0])))
        scale_J = max(1.0, np.max(np.abs(out["python"][1])))
        np.testing.assert_allclose(out["cython"][0], out["python"][0], rtol=0, atol=1e-13 * scale_F)
        np.testing.assert_allclose(out["cython"][1], out["python"][1], rtol=0, atol=1e-13 * scale_J)


@needs_ext
@pytest.mark.parametrize("name", sorted(PRESETS))
def test_midpoint_kernels_agree(name):
    preset = PRESETS[name]
    rng = np.random.default_rng(12)
    n = preset.model.n
    for prev, h, dx in _random_states(preset, rng):
        x = np.concatenate([prev.p, prev.q]) + dx[: 2 * n]
        out = {}
        for be in ("python", "cython"):
            system = MidpointStepSystem(preset.model, prev, h)
            out[be] = _with(be, lambda: (system.residual(x), system.analytic_jacobian(x)))
        for a, b in zip(out["cython"], out["python"]):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-13 * max(1.0, np.max(np.abs(b))))


@needs_ext
@settings(max_examples=100, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**31))
def test_lu_solve_agrees(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + n * np.eye(n)
    b = rng.normal(size=n)
    x_py = kernels.get("python").lu_solve(A, b)
    x_c = kernels.get("cython").lu_solve(A, b)
    np.testing.assert_allclose(x_c, x_py, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(A @ x_c, b, atol=1e-10)


def test_lu_solve_leaves_inputs_untouched(backend):
    A = np.array([[0.0, 2.0], [1.0, 1.0]])
    b = np.array([2.0, 3.0])
    A0, b0 = A.copy(), b.copy()
    np.testing.assert_allclose(kernels.active().lu_solve(A, b), [2.0, 1.0])
    assert np.array_equal(A, A0) and np.array_equal(b, b0)


def test_singular_lu_raises(backend):
    with pytest.raises(SolverError):
        kernels.active().lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))


@needs_ext
@pytest.mark.parametrize("integrator", ["simpson", "midpoint"])
def test_integration_agrees_across_backends(integrator):
    preset = PRESETS["lagrange-top-table3"]
    trajs = {be: _with(be, lambda: run(preset, integrator, 0.02, 1.0)) for be in ("python", "cython")}
    np.testing.assert_allclose(trajs["cython"].q, trajs["python"].q, rtol=0, atol=1e-12)
    np.testing.assert_allclose(trajs["cython"].p, trajs["python"].p, rtol=0, atol=1e-12 * np.abs(trajs["python"].p).max())


def test_pure_python_env_forces_fallback():
    code = "from simpvi import kernels; print(kernels.backend_name())"
    env = dict(os.environ, SIMPVI_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
def test_compiled_backend_is_default():
    env = {k: v for k, v in os.environ.items() if k != "SIMPVI_PURE_PYTHON"}
    code = "from simpvi import kernels; print(kernels.backend_name())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"


def test_initial_point_consistent_across_backends(backend):
    preset = PRESETS["double-pendulum-table1"]
    traj = run(preset, "simpson", 0.1, 0.3)
    assert traj.t.size == 4 and np.array_equal(traj.q[0], initial_point(preset).q)
