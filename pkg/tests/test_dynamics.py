import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from exosim import dynamics as dyn
from exosim.dynamics import FIXTURE, JointState, TorqueSet
from exosim.errors import NonFiniteState

RNG = np.random.default_rng(1234)


def random_states(n, rng=RNG):
    return rng.uniform(-np.pi, np.pi, (n, 2)), rng.uniform(-3, 3, (n, 2))


# --- mass matrix ---------------------------------------------------------

def test_mass_matrix_frozen_upright_values():
    # a = 10.8, b = 3.75, d = 2.475 for the fixture (hand-expanded inertia sums)
    M = dyn.mass_matrix(FIXTURE, (0.0, 0.0))
    np.testing.assert_allclose(M, [[18.3, 6.225], [6.225, 2.475]], rtol=1e-12)


@pytest.mark.parametrize("m_load", [0.0, 5.0])
def test_mass_matrix_matches_kinetic_energy_hessian(m_load):
    model = FIXTURE.with_load(m_load)
    for q in [(0.0, 0.0), *RNG.uniform(-np.pi, np.pi, (20, 2))]:
        M = dyn.mass_matrix(model, q)
        H = oracles.ke_hessian(model, np.asarray(q))
        np.testing.assert_allclose(M, H, rtol=1e-6, atol=1e-9)


def test_mass_matrix_even_in_lumbar_angle():
    np.testing.assert_allclose(dyn.mass_matrix(FIXTURE, (0.3, np.pi / 2)),
                               dyn.mass_matrix(FIXTURE, (0.3, -np.pi / 2)), atol=1e-14)


def test_mass_matrix_spd_on_random_states():
    model = FIXTURE.with_load(5.0)
    for q in RNG.uniform(-np.pi, np.pi, (1000, 2)):
        M = dyn.mass_matrix(model, q)
        assert np.array_equal(M, M.T)
        assert np.all(np.linalg.eigvalsh(M) > 0)


@settings(max_examples=200, deadline=None)
@given(l1=st.floats(0.1, 1.0), l2=st.floats(0.1, 1.0), m1=st.floats(1, 80),
       m2=st.floats(1, 80), f1=st.floats(0.05, 1.0), f2=st.floats(0.05, 1.0),
       I1=st.floats(0.01, 5), I2=st.floats(0.01, 5), ml=st.floats(0, 40),
       q2=st.floats(-np.pi, np.pi))
def test_mass_matrix_spd_any_model(l1, l2, m1, m2, f1, f2, I1, I2, ml, q2):
    model = dyn.AnthropometricModel(l1, l2, m1, m2, f1 * l1, f2 * l2, I1, I2, ml)
    assert np.all(np.linalg.eigvalsh(dyn.mass_matrix(model, (0.0, q2))) > 0)


# --- Coriolis --------------------------------------------------------------

def test_coriolis_vanishes_at_rest():
    C = dyn.coriolis_matrix(FIXTURE, (0.4, 0.9), (0.0, 0.0))
    np.testing.assert_array_equal(C @ np.zeros(2), 0.0)


def _mdot(model, q, dq, h=1e-30):
    # complex-step derivative of M along qdot: exact to rounding
    return dyn.mass_matrix(model, q + 1j * h * dq).imag / h


def test_mdot_minus_2c_is_skew():
    model = FIXTURE.with_load(5.0)
    Q, DQ = random_states(50)
    for q, dq in zip(Q, DQ):
        N = _mdot(model, q, dq) - 2 * dyn.coriolis_matrix(model, q, dq)
        for v in RNG.standard_normal((100, 2)):
            assert abs(v @ N @ v) < 1e-8


def test_coriolis_matches_lagrangian_velocity_terms():
    # velocity-product terms of d/dt(dT/dqdot) - dT/dq are  Mdot qdot - dT/dq
    model = FIXTURE.with_load(5.0)
    Q, DQ = random_states(30)
    for q, dq in zip(Q, DQ):
        dTdq = oracles.grad(lambda x: oracles.kinetic_energy(model, x, dq), q)
        expected = _mdot(model, q, dq) @ dq - dTdq
        got = dyn.coriolis_matrix(model, q, dq) @ dq
        np.testing.assert_allclose(got, expected, atol=1e-5)


# --- gravity -----------------------------------------------------------------

def test_gravity_zero_upright():
    np.testing.assert_allclose(dyn.gravity_vector(FIXTURE.with_load(5), (0, 0)), 0.0, atol=1e-15)


@pytest.mark.parametrize("q", [(np.pi / 2, 0.0), (0.7, 0.3), (-1.0, 2.0)])
def test_gravity_is_potential_energy_gradient(q):
    # sign: G enters tau = ... + G, i.e. G = dV/dtheta (see ledger on the sign wording)
    model = FIXTURE.with_load(5.0)
    fd = oracles.grad(lambda x: oracles.potential_energy(model, x), q)
    np.testing.assert_allclose(dyn.gravity_vector(model, q), fd, atol=1e-6)


def test_gravity_gradient_property_random():
    model = FIXTURE.with_load(3.0)
    for q in RNG.uniform(-np.pi, np.pi, (200, 2)):
        fd = oracles.grad(lambda x: oracles.potential_energy(model, x), q)
        assert np.max(np.abs(dyn.gravity_vector(model, q) - fd)) < 1e-5


def test_gravity_linear_in_g():
    m2 = dyn.AnthropometricModel(**{**FIXTURE.__dict__, "g": 2 * 9.81})
    q = (0.8, -0.2)
    np.testing.assert_array_equal(dyn.gravity_vector(m2, q), 2 * dyn.gravity_vector(FIXTURE, q))


def test_potential_energy_agrees_with_oracle():
    model = FIXTURE.with_load(5.0)
    for q in RNG.uniform(-np.pi, np.pi, (20, 2)):
        assert dyn.potential_energy(model, q) == pytest.approx(
            oracles.potential_energy(model, q), rel=1e-12, abs=1e-12)


# --- Jacobian --------------------------------------------------------------

def test_jacobian_matches_forward_kinematics_differences():
    h = 1e-7
    for q in RNG.uniform(-np.pi, np.pi, (20, 2)):
        J = dyn.endpoint_jacobian(FIXTURE, q)
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            tip = lambda x: oracles.com_positions(FIXTURE, x)[2]  # noqa: E731
            col = (tip(q + e) - tip(q - e)) / (2 * h)
            np.testing.assert_allclose(J[:, k], col, atol=1e-6)


def test_endpoint_position_matches_oracle():
    q = (0.5, 0.25)
    np.testing.assert_allclose(dyn.endpoint_position(FIXTURE, q),
                               oracles.com_positions(FIXTURE, q)[2], atol=1e-15)


def test_jacobian_transpose_vanishes_upright_for_vertical_load():
    J = dyn.endpoint_jacobian(FIXTURE, (0.0, 0.0))
    np.testing.assert_allclose(J.T @ np.array([0.0, -5 * 9.81]), 0.0, atol=1e-12)


# --- inverse dynamics -------------------------------------------------------

def test_inverse_dynamics_static_upright_is_zero():
    tau = dyn.inverse_dynamics(FIXTURE, JointState((0, 0), (0, 0)), (0, 0))
    np.testing.assert_allclose(tau, 0.0, atol=1e-12)


def test_inverse_dynamics_static_moment_sum():
    model = FIXTURE.with_load(5.0)
    q = np.radians([45.0, 15.0])
    tau = dyn.inverse_dynamics(model, JointState(q, (0, 0)), (0, 0))
    np.testing.assert_allclose(tau, oracles.static_moment_sum(model, q), rtol=1e-6)
    # frozen from the oracle
    np.testing.assert_allclose(tau, [-223.69144258, -84.95709211], rtol=1e-8)


def test_load_mass_equals_external_hand_force_when_static():
    q = np.radians([45.0, 15.0])
    st_ = JointState(q, (0, 0))
    with_mass = dyn.inverse_dynamics(FIXTURE.with_load(5.0), st_, (0, 0))
    with_force = dyn.inverse_dynamics(FIXTURE, st_, (0, 0), load_force=(0.0, -5 * 9.81))
    np.testing.assert_allclose(with_mass, with_force, rtol=1e-12)


def test_tau_ext_only_touches_lumbar_row():
    q, dq, ddq = np.array([0.6, 0.2]), np.array([0.3, -0.4]), np.array([1.0, -2.0])
    s = JointState(q, dq)
    base = dyn.inverse_dynamics(FIXTURE, s, ddq)
    for delta in (0.5, 2.5, 10.0):
        tau = dyn.inverse_dynamics(FIXTURE, s, ddq, tau_ext=delta)
        assert tau[0] == base[0]
        # the lumbar extensor moment (-tau[1]) the human must supply drops by delta
        assert (-tau[1]) == pytest.approx(-base[1] - delta, abs=1e-12)


def test_inverse_dynamics_batch_matches_scalar():
    Q, DQ = random_states(25)
    DDQ = RNG.standard_normal((25, 2))
    lf = RNG.standard_normal((25, 2))
    te = RNG.uniform(0, 3, 25)
    model = FIXTURE.with_load(2.0)
    batch = dyn.inverse_dynamics_trajectory(model, Q, DQ, DDQ, lf, te)
    for k in range(25):
        ref = dyn.inverse_dynamics(model, JointState(Q[k], DQ[k]), DDQ[k], lf[k], te[k])
        np.testing.assert_allclose(batch[k], ref, rtol=1e-12, atol=1e-12)


# --- forward dynamics ---------------------------------------------------------

def test_zero_gravity_zero_torque_is_stationary():
    model = dyn.AnthropometricModel(**{**FIXTURE.__dict__, "g": 0.0})
    s = JointState((0.4, 0.3), (0, 0))
    out = dyn.forward_dynamics_step(model, s, TorqueSet(), 1e-3)
    np.testing.assert_array_equal(out.theta, s.theta)
    np.testing.assert_array_equal(out.theta_dot, s.theta_dot)


def test_inverse_forward_round_trip():
    model = FIXTURE.with_load(5.0)
    traj = dyn.lift_trajectory(duration=2.0, dt=1e-3)
    tau = dyn.inverse_dynamics_trajectory(model, traj.theta, traj.theta_dot, traj.theta_ddot)
    worst = 0.0
    for k in range(0, len(traj.t) - 1, 50):
        s = JointState(traj.theta[k], traj.theta_dot[k])
        # torque held over the step: use the mid-step average of the exact torques
        out = dyn.forward_dynamics_step(model, s, TorqueSet(0.5 * (tau[k] + tau[k + 1])), 1e-3)
        worst = max(worst, np.max(np.abs(out.theta - traj.theta[k + 1])))
    assert worst < 1e-6


def test_energy_conserved_without_torques():
    model = FIXTURE.with_load(5.0)
    s0 = JointState((np.pi / 2, 0.3), (0.0, 0.0))
    dt, n = 1e-3, 2000
    th, om = dyn.integrate(model, s0, np.zeros((n, 2)), dt)
    E = np.array([dyn.kinetic_energy(model, a, b) + dyn.potential_energy(model, a)
                  for a, b in zip(th, om)])
    scale = np.max(np.abs(E - E.min())) + abs(E[0])
    assert np.max(np.abs(E - E[0])) / scale < 1e-3
    # the pendulum must actually move for the check to mean anything
    assert np.ptp(th[:, 0]) > 1.0


def test_integrate_matches_stepwise():
    model = FIXTURE.with_load(1.0)
    s = JointState((0.2, 0.1), (0.5, -0.3))
    tau = RNG.standard_normal((40, 2)) * 10
    th, om = dyn.integrate(model, s, tau, 2e-3, tau_ext=0.7)
    for k in range(40):
        s = dyn.forward_dynamics_step(model, s, TorqueSet(tau[k], tau_ext=0.7), 2e-3)
    np.testing.assert_allclose(th[-1], s.theta, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(om[-1], s.theta_dot, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("dt", [0.0, -1e-3, 0.02])
def test_forward_step_rejects_bad_dt(dt):
    with pytest.raises(ValueError, match="dt"):
        dyn.forward_dynamics_step(FIXTURE, JointState((0, 0), (0, 0)), TorqueSet(), dt)


def test_divergence_raises_non_finite_state():
    with pytest.raises(NonFiniteState):
        dyn.integrate(FIXTURE, JointState((0, 0), (0, 0)), np.full((50, 2), 1e305), 1e-2)


def test_joint_state_rejects_nan():
    with pytest.raises(NonFiniteState):
        JointState((np.nan, 0), (0, 0))


@pytest.mark.parametrize("bad", [dict(l1=0.0), dict(m2=-1.0), dict(r1=0.6), dict(m_load=-1)])
def test_model_validation(bad):
    with pytest.raises(ValueError):
        dyn.AnthropometricModel(**{**FIXTURE.__dict__, **bad})


# --- lift trajectory ----------------------------------------------------------

def test_trajectory_boundaries_and_peak():
    tr = dyn.lift_trajectory()
    for arr in (tr.theta, tr.theta_dot, tr.theta_ddot):
        np.testing.assert_allclose(arr[0], 0.0, atol=1e-12)
        np.testing.assert_allclose(arr[-1], 0.0, atol=1e-12)
    mid = len(tr.t) // 2
    assert tr.t[mid] == pytest.approx(2.0)
    assert tr.theta[mid, 0] == pytest.approx(0.7854, abs=5e-5)
    assert np.argmax(tr.theta[:, 0]) == mid
    np.testing.assert_allclose(tr.theta_dot[mid], 0.0, atol=1e-12)


def test_trajectory_derivatives_consistent():
    # the mirrored profile has a jerk jump at T/2, so the differencing grid
    # must be fine enough that the kink error (~jump * dt / 4) stays small
    tr = dyn.lift_trajectory(dt=1e-5)
    dt = tr.t[1] - tr.t[0]
    fd_acc = np.gradient(tr.theta_dot, dt, axis=0, edge_order=2)
    assert np.max(np.abs(fd_acc - tr.theta_ddot)) < 1e-4
    fd_vel = np.gradient(tr.theta, dt, axis=0, edge_order=2)
    assert np.max(np.abs(fd_vel - tr.theta_dot)) < 1e-4


def test_trajectory_is_time_symmetric():
    tr = dyn.lift_trajectory(duration=3.0, dt=1e-3)
    np.testing.assert_allclose(tr.theta, tr.theta[::-1], atol=1e-12)


# --- load monotonicity ------------------------------------------------------------

def test_peak_torques_non_decreasing_in_load():
    tr = dyn.lift_trajectory()
    peaks = []
    for m_load in np.linspace(0, 25, 11):
        tau = dyn.inverse_dynamics_trajectory(FIXTURE.with_load(m_load), tr.theta,
                                              tr.theta_dot, tr.theta_ddot)
        peaks.append(np.max(-tau, axis=0))
    peaks = np.array(peaks)
    assert np.all(np.diff(peaks, axis=0) >= 0)
