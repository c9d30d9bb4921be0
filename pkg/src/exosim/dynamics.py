"""Planar two-link (hip, L5-S1) model of stoop lifting.

Kinematics: the hip joint sits at the origin, x points forward and y up.
Angles are measured from the upright vertical, flexion positive; joint 2
is relative to segment 1. The held load is a point mass at the distal end
of segment 2.

Equation of motion, with G the gradient of the potential energy::

    M(q) q'' + C(q, q') q' + G(q) = tau + J(q)^T f_load - J2^T tau_ext

J2 = [0, 1], so the assist torque only acts on L5-S1. Because flexion is
positive, a human extensor moment shows up as a negative joint torque and a
positive ``tau_ext`` (the device pulling into extension) makes ``tau[1]``
less negative.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import NonFiniteState

J2 = np.array([[0.0, 1.0]])


@dataclass(frozen=True)
class AnthropometricModel:
    l1: float
    l2: float
    m1: float
    m2: float
    r1: float
    r2: float
    I1: float
    I2: float
    m_load: float = 0.0
    g: float = 9.81

    def __post_init__(self):
        for name in ("l1", "l2", "m1", "m2", "r1", "r2", "I1", "I2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if self.r1 > self.l1 or self.r2 > self.l2:
            raise ValueError("centre of mass must lie on its segment (r <= l)")
        if not (np.isfinite(self.m_load) and self.m_load >= 0):
            raise ValueError(f"m_load must be >= 0, got {self.m_load!r}")
        if not np.isfinite(self.g):
            raise ValueError("g must be finite")

    def with_load(self, m_load: float) -> "AnthropometricModel":
        return replace(self, m_load=m_load)

    def packed(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.m1, self.m2, self.r1, self.r2,
                         self.I1, self.I2, self.m_load, self.g], dtype=float)


# Test scaffolding, not subject data.
FIXTURE = AnthropometricModel(l1=0.5, l2=0.5, m1=10.0, m2=30.0, r1=0.25, r2=0.25,
                              I1=0.2, I2=0.6, m_load=0.0)


@dataclass(frozen=True)
class JointState:
    theta: np.ndarray
    theta_dot: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).reshape(2)
        om = np.asarray(self.theta_dot, dtype=float).reshape(2)
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(om))):
            raise NonFiniteState(f"non-finite joint state {th}, {om}")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "theta_dot", om)


@dataclass(frozen=True)
class TorqueSet:
    tau: np.ndarray = field(default_factory=lambda: np.zeros(2))
    tau_ext: float = 0.0
    load_force: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float).reshape(2))
        object.__setattr__(self, "load_force",
                           np.asarray(self.load_force, dtype=float).reshape(2))
        if not (np.all(np.isfinite(self.tau)) and np.isfinite(self.tau_ext)
                and np.all(np.isfinite(self.load_force))):
            raise ValueError("torques and forces must be finite")


def _inertia_constants(m: AnthropometricModel):
    a = (m.I1 + m.m1 * m.r1**2 + m.I2 + m.m2 * (m.l1**2 + m.r2**2)
         + m.m_load * (m.l1**2 + m.l2**2))
    b = m.m2 * m.l1 * m.r2 + m.m_load * m.l1 * m.l2
    d = m.I2 + m.m2 * m.r2**2 + m.m_load * m.l2**2
    return a, b, d


def mass_matrix(model: AnthropometricModel, theta) -> np.ndarray:
    a, b, d = _inertia_constants(model)
    c2 = np.cos(theta[1])
    return np.array([[a + 2 * b * c2, d + b * c2],
                     [d + b * c2, d]])


def coriolis_matrix(model: AnthropometricModel, theta, theta_dot) -> np.ndarray:
    """Christoffel-symbol Coriolis matrix, so that dM/dt - 2C is skew."""
    _, b, _ = _inertia_constants(model)
    h = -b * np.sin(theta[1])
    dq1, dq2 = theta_dot
    return np.array([[h * dq2, h * (dq1 + dq2)],
                     [-h * dq1, 0.0]])


def gravity_vector(model: AnthropometricModel, theta) -> np.ndarray:
    m = model
    k2 = m.m2 * m.r2 + m.m_load * m.l2
    g2 = -m.g * k2 * np.sin(theta[0] + theta[1])
    g1 = -m.g * (m.m1 * m.r1 + (m.m2 + m.m_load) * m.l1) * np.sin(theta[0]) + g2
    return np.array([g1, g2])


def endpoint_position(model: AnthropometricModel, theta) -> np.ndarray:
    q1, q12 = theta[0], theta[0] + theta[1]
    return np.array([model.l1 * np.sin(q1) + model.l2 * np.sin(q12),
                     model.l1 * np.cos(q1) + model.l2 * np.cos(q12)])


def endpoint_jacobian(model: AnthropometricModel, theta) -> np.ndarray:
    q1, q12 = theta[0], theta[0] + theta[1]
    l1, l2 = model.l1, model.l2
    return np.array([[l1 * np.cos(q1) + l2 * np.cos(q12), l2 * np.cos(q12)],
                     [-l1 * np.sin(q1) - l2 * np.sin(q12), -l2 * np.sin(q12)]])


def kinetic_energy(model: AnthropometricModel, theta, theta_dot) -> float:
    om = np.asarray(theta_dot, dtype=float)
    return 0.5 * om @ mass_matrix(model, theta) @ om


def potential_energy(model: AnthropometricModel, theta) -> float:
    m = model
    h1 = np.cos(theta[0])
    h12 = np.cos(theta[0] + theta[1])
    return m.g * (m.m1 * m.r1 * h1 + m.m2 * (m.l1 * h1 + m.r2 * h12)
                  + m.m_load * (m.l1 * h1 + m.l2 * h12))


def inverse_dynamics(model: AnthropometricModel, state: JointState, theta_ddot,
                     load_force=(0.0, 0.0), tau_ext: float = 0.0) -> np.ndarray:
    """Human joint torques needed to realise ``theta_ddot`` from ``state``."""
    q, dq = state.theta, state.theta_dot
    ddq = np.asarray(theta_ddot, dtype=float)
    f = np.asarray(load_force, dtype=float)
    tau = (mass_matrix(model, q) @ ddq + coriolis_matrix(model, q, dq) @ dq
           + gravity_vector(model, q) - endpoint_jacobian(model, q).T @ f
           + J2.T[:, 0] * tau_ext)
    return tau


def forward_acceleration(model: AnthropometricModel, state: JointState,
                         torques: TorqueSet) -> np.ndarray:
    q, dq = state.theta, state.theta_dot
    rhs = (torques.tau + endpoint_jacobian(model, q).T @ torques.load_force
           - J2.T[:, 0] * torques.tau_ext
           - coriolis_matrix(model, q, dq) @ dq - gravity_vector(model, q))
    return np.linalg.solve(mass_matrix(model, q), rhs)


def forward_dynamics_step(model: AnthropometricModel, state: JointState,
                          torques: TorqueSet, dt: float) -> JointState:
    """Advance one fixed RK4 step with torques held over the step."""
    if not (0 < dt <= 0.01):
        raise ValueError(f"dt must be in (0, 0.01] s, got {dt!r}")

    def f(q, w):
        with np.errstate(all="ignore"):
            return forward_acceleration(model, _unchecked(q, w), torques)

    q, w = state.theta, state.theta_dot
    a = f(q, w)
    v = w + 0.5 * dt * a
    b = f(q + 0.5 * dt * w, v)
    u = w + 0.5 * dt * b
    c = f(q + 0.5 * dt * v, u)
    e = w + dt * c
    d = f(q + dt * u, e)
    q_new = q + dt / 6 * (w + 2 * v + 2 * u + e)
    w_new = w + dt / 6 * (a + 2 * b + 2 * c + d)
    if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(w_new))):
        raise NonFiniteState(f"integration diverged (dt={dt})")
    return JointState(q_new, w_new)


def _unchecked(q, w):
    s = object.__new__(JointState)
    object.__setattr__(s, "theta", q)
    object.__setattr__(s, "theta_dot", w)
    return s


def integrate(model: AnthropometricModel, state: JointState, tau, dt: float,
              load_force=None, tau_ext=None):
    """Run RK4 over a torque history (one row per step).

    Returns (theta, theta_dot) arrays with ``len(tau) + 1`` rows.
    """
    if not (0 < dt <= 0.01):
        raise ValueError(f"dt must be in (0, 0.01] s, got {dt!r}")
    tau = np.ascontiguousarray(tau, dtype=float).reshape(-1, 2)
    n = len(tau)
    lf = np.zeros((n, 2)) if load_force is None else np.ascontiguousarray(
        np.broadcast_to(load_force, (n, 2)), dtype=float)
    te = np.zeros(n) if tau_ext is None else np.ascontiguousarray(
        np.broadcast_to(tau_ext, (n,)), dtype=float)
    th, om, bad = kernels.rk4_integrate(model.packed(), state.theta, state.theta_dot,
                                        tau, lf, te, float(dt))
    if bad >= 0:
        raise NonFiniteState(f"integration diverged at step {bad} (dt={dt})")
    return th, om


def inverse_dynamics_trajectory(model: AnthropometricModel, theta, theta_dot,
                                theta_ddot, load_force=None, tau_ext=None) -> np.ndarray:
    """Vectorised ``inverse_dynamics`` over rows of a trajectory."""
    theta = np.ascontiguousarray(theta, dtype=float)
    n = len(theta)
    lf = np.zeros((n, 2)) if load_force is None else np.ascontiguousarray(
        np.broadcast_to(load_force, (n, 2)), dtype=float)
    te = np.zeros(n) if tau_ext is None else np.ascontiguousarray(
        np.broadcast_to(tau_ext, (n,)), dtype=float)
    return kernels.inverse_dynamics_batch(
        model.packed(), theta, np.ascontiguousarray(theta_dot, dtype=float),
        np.ascontiguousarray(theta_ddot, dtype=float), lf, te)


@dataclass(frozen=True)
class LiftTrajectory:
    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray


def lift_trajectory(peak_hip: float = np.pi / 4, peak_lumbar: float = np.radians(15),
                    duration: float = 4.0, dt: float = 1e-3) -> LiftTrajectory:
    """Symmetric down-and-up stoop cycle built from two minimum-jerk halves.

    Position, velocity and acceleration are zero at both ends and the peak
    posture is reached at ``duration / 2`` with zero velocity.
    """
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be > 0")
    n = int(round(duration / dt))
    t = np.arange(n + 1) * (duration / n)
    half = duration / 2
    u = np.where(t <= half, t / half, (duration - t) / half)
    sgn = np.where(t <= half, 1.0, -1.0)
    s = 10 * u**3 - 15 * u**4 + 6 * u**5
    ds = (30 * u**2 - 60 * u**3 + 30 * u**4) * sgn / half
    dds = (60 * u - 180 * u**2 + 120 * u**3) / half**2
    amp = np.array([peak_hip, peak_lumbar])
    return LiftTrajectory(t, s[:, None] * amp, ds[:, None] * amp, dds[:, None] * amp)
