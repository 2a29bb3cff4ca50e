import numpy as np
import pytest

from simpvi.analysis import energy_error_series, momentum_error_series, sup_norm
from simpvi.baselines import (
    REDUCED_P_PHI,
    REDUCED_P_PSI,
    FirstOrderField,
    MidpointStepSystem,
    MidpointUnknowns,
    hamiltonian_field,
    midpoint_integrate,
    midpoint_jacobian,
    midpoint_residual,
    midpoint_step,
    reduced_precession_rate,
    reduced_top_field,
    rk4_integrate,
    rk4_step,
    rk4_trajectory,
)
from simpvi.errors import ContractError, SingularityError
from simpvi.experiments import initial_point, reference_period
from simpvi.model import PhasePoint
from simpvi.simpson import check_jacobian_blocks
from simpvi.systems import PRESETS

from conftest import free_particle, oscillator


def test_midpoint_free_particle_exact():
    model = free_particle()
    v = np.array([1.0, -2.0])
    nxt, stats = midpoint_step(model, PhasePoint(0.0, [0.0, 0.0], model.mass(None) @ v), 0.2)
    np.testing.assert_allclose(nxt.q, 0.2 * v, atol=1e-15)
    assert stats.newton_iterations == 1


def test_midpoint_residual_zero_at_exact_linear_motion():
    model = free_particle()
    prev = PhasePoint(0.0, [0.0, 0.0], [1.0, 0.5])
    v = np.linalg.solve(model.mass(None), prev.p)
    F = midpoint_residual(model, prev, MidpointUnknowns(prev.p, 0.3 * v), 0.3)
    assert np.max(np.abs(F)) < 1e-15


def test_midpoint_jacobian_structure():
    model = oscillator()
    h = 0.1
    J = midpoint_jacobian(model, PhasePoint(0.0, [0.2], [0.1]), MidpointUnknowns(np.array([0.1]), np.array([0.3])), h)
    assert J[0, 0] == 1.0
    assert J[1, 0] == pytest.approx(-h / 2)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_midpoint_jacobian_matches_fd(name):
    preset = PRESETS[name]
    rng = np.random.default_rng(5)
    n = preset.model.n
    for _ in range(20):
        ql = preset.q0 + rng.uniform(-0.5, 0.5, n)
        h = rng.uniform(0.005, 0.1)
        prev = PhasePoint(0.0, ql, preset.model.mass(ql) @ rng.uniform(-2, 2, n))
        x = np.concatenate([prev.p * 1.05, ql + rng.uniform(-h, h, n)])
        _, failing = check_jacobian_blocks(MidpointStepSystem(preset.model, prev, h), x, 1e-5)
        assert not failing


def test_midpoint_global_order_two():
    errs = []
    hs = [0.1, 0.05, 0.025, 0.0125]
    for h in hs:
        traj = midpoint_integrate(oscillator(), PhasePoint(0.0, [1.0], [0.0]), h, 1.0)
        errs.append(abs(traj.q[-1, 0] - np.cos(1.0)))
    assert 1.8 <= np.polyfit(np.log(hs), np.log(errs), 1)[0] <= 2.2


def test_midpoint_trajectory_midpoints_are_averages():
    traj = midpoint_integrate(oscillator(), PhasePoint(0.0, [1.0], [0.0]), 0.1, 0.5)
    np.testing.assert_allclose(traj.midpoints, 0.5 * (traj.q[:-1] + traj.q[1:]))
    assert traj.method == "midpoint"


def test_midpoint_conserves_top_momenta():
    preset = PRESETS["lagrange-top-table3"]
    T = reference_period(preset)
    traj = midpoint_integrate(preset.model, initial_point(preset), 0.05 * T, T)
    for k in (0, 2):
        assert sup_norm(momentum_error_series(traj, preset.model, k)) <= 1e-11


def test_midpoint_time_reversal():
    model = oscillator()
    fwd = midpoint_integrate(model, PhasePoint(0.0, [1.0], [0.3]), 0.01, 1.0)
    back = midpoint_integrate(model, PhasePoint(0.0, fwd.q[-1], -fwd.p[-1]), 0.01, 1.0)
    assert abs(back.q[-1, 0] - 1.0) < 1e-8


# ---------------------------------------------------------------------------
# RK4


def test_rk4_exponential_order_four():
    field = FirstOrderField(1, lambda t, y: -y, "decay")
    errs = []
    hs = [0.2, 0.1, 0.05, 0.025]
    for h in hs:
        _, y = rk4_integrate(field, 0.0, np.array([1.0]), h, 1.0)
        errs.append(abs(y[-1, 0] - np.exp(-1.0)))
    assert 3.8 <= np.polyfit(np.log(hs), np.log(errs), 1)[0] <= 4.2


def test_rk4_single_step_exact_for_cubic_in_time():
    field = FirstOrderField(1, lambda t, y: np.array([3 * t * t]), "cubic")
    assert rk4_step(field, 0.5, np.array([0.125]), 0.5)[0] == pytest.approx(1.0, rel=1e-15)


def test_field_shape_checked():
    field = FirstOrderField(2, lambda t, y: np.zeros(3), "bad")
    with pytest.raises(ContractError):
        field(0.0, np.zeros(2))


def test_hamiltonian_field_oscillator():
    f = hamiltonian_field(oscillator(2.0))
    np.testing.assert_allclose(f(0.0, np.array([1.0, 3.0])), [3.0, -4.0])


def test_hamiltonian_field_pendulum_matches_lagrangian_momentum_rate():
    # pdot = dL/dq = 1/2 dM[v, v] - dV; check one component against finite differences of L
    from simpvi.model import lagrangian

    preset = PRESETS["double-pendulum-table1"]
    q, v = np.array([0.4, -0.6]), np.array([1.1, 0.3])
    p = preset.model.mass(q) @ v
    rhs = hamiltonian_field(preset.model)(0.0, np.concatenate([q, p]))
    np.testing.assert_allclose(rhs[:2], v, rtol=1e-12)
    eps = 1e-6
    dLdq = [(lagrangian(preset.model, q + eps * e, v) - lagrangian(preset.model, q - eps * e, v)) / (2 * eps)
            for e in np.eye(2)]
    np.testing.assert_allclose(rhs[2:], dLdq, rtol=1e-7)


def test_rk4_trajectory_packaging():
    traj = rk4_trajectory(oscillator(), PhasePoint(0.0, [1.0], [0.0]), 0.1, 1.0)
    assert traj.method == "rk4" and traj.n_steps == 10
    assert traj.midpoints.shape == (0, 1)


def test_rk4_energy_drifts_on_pendulum():
    preset = PRESETS["double-pendulum-table1"]
    traj = rk4_trajectory(preset.model, initial_point(preset), 0.1, 10.0)
    e = energy_error_series(traj, preset.model).values
    # secular growth: the last tenth sits well above the first tenth
    assert np.abs(e[-10:]).min() > 5 * np.abs(e[:10]).max()


# ---------------------------------------------------------------------------
# reduced top


def test_reduced_constants():
    assert REDUCED_P_PHI == pytest.approx(2 * np.pi * np.sqrt(3))
    assert REDUCED_P_PSI == pytest.approx(4 * np.pi)


def test_reduced_precession_vanishes_at_start():
    # cusp: phi' = 0 at theta = pi/6
    assert abs(reduced_precession_rate(np.pi / 6)) < 1e-13


def test_reduced_field_guard():
    with pytest.raises(SingularityError):
        reduced_top_field()(0.0, np.array([0.0, 1e-12, 0.0]))


def test_reduced_field_matches_full_model():
    preset = PRESETS["lagrange-top-table4"]
    q = np.array([0.3, 0.9, -0.2])
    qdot = np.array([0.0, 0.4, 0.0])
    # choose phi', psi' consistent with the reduced momenta at this theta
    phidot = reduced_precession_rate(q[1])
    qdot[0] = phidot
    qdot[2] = REDUCED_P_PSI / preset.params.I3 - phidot * np.cos(q[1])
    full = hamiltonian_field(preset.model)(0.0, np.concatenate([q, preset.model.mass(q) @ qdot]))
    red = reduced_top_field()(0.0, np.array([q[0], q[1], qdot[1]]))
    assert red[0] == pytest.approx(full[0], rel=1e-12)
    # theta'' from the full field: p_theta = I theta'
    assert red[2] == pytest.approx(full[4] / preset.params.I, rel=1e-10)
