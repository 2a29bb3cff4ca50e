import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simpvi.errors import ContractError, SolverError
from simpvi.newton import NewtonConfig, fd_jacobian, solve


def _affine(A, b):
    return (lambda x: A @ x - b), (lambda x: A)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_affine_system_one_iteration(x0):
    A = np.array([[4.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, 2.0, 5.0]])
    b = np.array([1.0, -2.0, 0.5])
    F, J = _affine(A, b)
    out = solve(F, J, x0, NewtonConfig(tolerance=1e-10))
    assert out.converged
    assert out.iterations <= 1
    np.testing.assert_allclose(A @ out.solution, b, atol=1e-12)


def test_square_root_of_four():
    out = solve(lambda x: x**2 - 4.0, lambda x: np.array([[2.0 * x[0]]]), [3.0])
    assert out.converged
    assert abs(out.solution[0] - 2.0) <= 1e-12
    assert out.iterations <= 7


def test_no_real_root_reports_failure():
    out = solve(lambda x: x**2 + 1.0, lambda x: np.array([[2.0 * x[0]]]), [0.5],
                NewtonConfig(max_iterations=20, fd_fallback=False))
    assert not out.converged
    assert out.iterations == 20


def test_exact_start_costs_nothing():
    out = solve(lambda x: x - 1.0, lambda x: np.eye(1), [1.0])
    assert out.iterations == 0 and out.converged and not out.polished


def test_converged_implies_tolerance():
    cfg = NewtonConfig(tolerance=1e-9)
    out = solve(lambda x: np.sin(x) - 0.5, lambda x: np.diag(np.cos(x)), [0.2], cfg)
    assert out.converged and out.residual_norm <= cfg.tolerance


def test_singular_jacobian_falls_back_to_fd():
    F = lambda x: np.array([x[0] ** 2 - 1.0])  # noqa: E731
    out = solve(F, lambda x: np.zeros((1, 1)), [2.0])
    assert out.converged and out.used_fd_jacobian
    assert out.solution[0] == pytest.approx(1.0, abs=1e-10)


def test_singular_jacobian_without_fallback_raises():
    with pytest.raises(SolverError):
        solve(lambda x: x - 1.0, lambda x: np.zeros((1, 1)), [2.0], NewtonConfig(fd_fallback=False))


def test_damped_residual_monotone():
    F = lambda x: np.array([np.arctan(x[0])])  # noqa: E731
    J = lambda x: np.array([[1.0 / (1.0 + x[0] ** 2)]])  # noqa: E731
    # undamped Newton on arctan diverges from |x0| > 1.39 until J underflows
    with np.errstate(over="ignore"), pytest.raises(SolverError):
        solve(F, J, [3.0], NewtonConfig(max_iterations=50, fd_fallback=False, polish=False))
    norms = [solve(F, J, [3.0], NewtonConfig(damping=0.999, max_iterations=k, polish=False)).residual_norm
             for k in range(1, 12)]
    assert all(b <= a for a, b in zip(norms, norms[1:]))
    assert solve(F, J, [3.0], NewtonConfig(damping=0.999)).converged


def test_deterministic():
    F = lambda x: np.array([x[0] ** 3 - x[1], x[1] ** 2 - 2.0])  # noqa: E731
    J = lambda x: np.array([[3 * x[0] ** 2, -1.0], [0.0, 2 * x[1]]])  # noqa: E731
    a = solve(F, J, [1.0, 1.0])
    b = solve(F, J, [1.0, 1.0])
    assert a.solution.tobytes() == b.solution.tobytes()


def test_polish_never_raises_residual():
    F = lambda x: np.array([np.exp(x[0]) - 2.0])  # noqa: E731
    J = lambda x: np.array([[np.exp(x[0])]])  # noqa: E731
    loose = NewtonConfig(tolerance=1e-4, polish=False)
    a = solve(F, J, [0.0], loose)
    b = solve(F, J, [0.0], NewtonConfig(tolerance=1e-4))
    assert b.iterations == a.iterations
    assert b.residual_norm <= a.residual_norm
    assert b.polished


def test_fd_jacobian_matches_analytic():
    F = lambda x: np.array([np.sin(x[0]) * x[1], x[0] ** 2 + np.exp(x[1])])  # noqa: E731
    x = np.array([0.3, -0.7])
    J = np.array([[np.cos(0.3) * -0.7, np.sin(0.3)], [0.6, np.exp(-0.7)]])
    np.testing.assert_allclose(fd_jacobian(F, x), J, rtol=1e-8)


@pytest.mark.parametrize(
    "kwargs",
    [dict(tolerance=0.0), dict(fd_step=-1.0), dict(damping=0.0), dict(damping=1.5),
     dict(max_iterations=0), dict(predictor="magic")],
)
def test_config_contract(kwargs):
    with pytest.raises(ContractError):
        NewtonConfig(**kwargs)
