import numpy as np
import pytest

from simpvi import kernels
from simpvi.model import LagrangianModel

# lines recorded by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def oscillator(omega=1.0):
    """M = 1, V = omega^2 q^2 / 2."""
    w2 = omega * omega
    return LagrangianModel(
        name="oscillator",
        n=1,
        mass=lambda q: np.eye(1),
        dmass=lambda q: np.zeros((1, 1, 1)),
        d2mass=lambda q: np.zeros((1, 1, 1, 1)),
        potential=lambda q: 0.5 * w2 * float(q[0] ** 2),
        grad_potential=lambda q: w2 * np.asarray(q, dtype=float),
        hess_potential=lambda q: w2 * np.eye(1),
    )


def free_particle(M=None):
    M = np.array([[2.0, 0.5], [0.5, 1.0]]) if M is None else np.asarray(M, dtype=float)
    n = M.shape[0]
    return LagrangianModel(
        name="free",
        n=n,
        mass=lambda q: M.copy(),
        dmass=lambda q: np.zeros((n, n, n)),
        d2mass=lambda q: np.zeros((n, n, n, n)),
        potential=lambda q: 0.0,
        grad_potential=lambda q: np.zeros(n),
        hess_potential=lambda q: np.zeros((n, n)),
        cyclic=tuple(range(n)),
    )


def power_model(k):
    """M = 1, V = q^k; used for quadrature exactness."""
    return LagrangianModel(
        name=f"power{k}",
        n=1,
        mass=lambda q: np.eye(1),
        dmass=lambda q: np.zeros((1, 1, 1)),
        d2mass=lambda q: np.zeros((1, 1, 1, 1)),
        potential=lambda q: float(q[0] ** k),
        grad_potential=lambda q: np.array([k * q[0] ** (k - 1) if k else 0.0]),
        hess_potential=lambda q: np.array([[k * (k - 1) * q[0] ** (k - 2) if k > 1 else 0.0]]),
    )


@pytest.fixture
def osc():
    return oscillator()


@pytest.fixture
def free():
    return free_particle()


@pytest.fixture(params=kernels.available())
def backend(request):
    previous = kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)
