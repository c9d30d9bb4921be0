"""Threshold-triggered proportional assist and the closed-loop lift simulation.

Per time step: lumbar angle -> spinal strain (linear gain) -> sensor
pressure -> controller -> actuator stroke (rate limited) -> MSAM force ->
assist torque on L5-S1 -> inverse dynamics for the human joint torques.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import trapezoid

from . import kernels
from .dynamics import inverse_dynamics_trajectory, lift_trajectory
from .errors import ExosimError, OutOfCalibratedRange, SensorFault, SimulationError
from .muscle import FULL_STROKE_STRAIN, MuscleParams, SyringeParams, strain_to_stroke
from .sensor import (SensorGeometry, pressure_at_strain, strain_from_pressure,
                     strain_limit)

if TYPE_CHECKING:
    from .config import ScenarioConfig


@dataclass(frozen=True)
class ControllerConfig:
    threshold: float = 280e3
    F_max: float = 50.0
    strain_max: float = 0.20
    moment_arm: float = 0.05
    # None: chosen so the trajectory's peak lumbar angle maps to strain_max
    lumbar_strain_gain: float | None = None
    stroke_rate: float = 0.05

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")
        if not self.F_max > 0:
            raise ValueError("F_max must be > 0")
        if not self.moment_arm > 0:
            raise ValueError("moment_arm must be > 0")
        if not (0 < self.strain_max <= 0.5):
            raise ValueError("strain_max must lie in (0, 0.5]")
        if self.lumbar_strain_gain is not None and not self.lumbar_strain_gain >= 0:
            raise ValueError("lumbar_strain_gain must be >= 0")
        if not self.stroke_rate > 0:
            raise ValueError("stroke_rate must be > 0")


@dataclass(frozen=True)
class ControlCommand:
    engaged: bool
    target_force: float
    actuator_stroke: float
    per_muscle_force: float = 0.0


def _force_fraction(cfg: ControllerConfig, geom: SensorGeometry, pressure):
    """Commanded fraction of F_max for each sensed pressure (0 when disengaged)."""
    p = np.asarray(pressure, dtype=float)
    engaged = p < cfg.threshold
    frac = np.zeros_like(p)
    if np.any(engaged):
        s_hi = strain_limit(geom)
        p_floor = pressure_at_strain(geom, s_hi)
        strain = strain_from_pressure(geom, np.maximum(p[engaged], p_floor))
        frac[engaged] = np.minimum(strain / cfg.strain_max, 1.0)
    return engaged, frac


def update(cfg: ControllerConfig, geom: SensorGeometry, p: MuscleParams,
           s: SyringeParams, sensed_pressure: float) -> ControlCommand:
    """One controller decision for a sensed pressure.

    Engages strictly below the threshold. The force rises in proportion to
    the sensed strain and saturates at ``F_max`` once the strain reaches
    ``strain_max``; the stroke displaces the same fraction of the working
    volume.
    """
    if cfg.threshold >= geom.P_init:
        raise ValueError("threshold must be below the sensor's P_init")
    if not np.isfinite(sensed_pressure) or sensed_pressure > geom.P_init:
        raise SensorFault(f"sensed pressure {sensed_pressure!r} Pa exceeds P_init "
                          f"{geom.P_init:g} Pa; sensor disconnected?")
    engaged, frac = _force_fraction(cfg, geom, sensed_pressure)
    engaged, frac = bool(engaged), float(frac)
    force = cfg.F_max * frac
    stroke = strain_to_stroke(s, FULL_STROKE_STRAIN * frac)
    return ControlCommand(engaged, force, stroke, force / p.n_muscles)


def assist_torque(target_force, moment_arm: float):
    if np.any(np.asarray(target_force) < 0) or moment_arm < 0:
        raise ValueError("force and moment arm must be >= 0")
    return target_force * moment_arm


@dataclass(frozen=True)
class RunResult:
    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    tau_human: np.ndarray
    tau_ext: np.ndarray
    spinal_strain: np.ndarray
    sensor_pressure: np.ndarray
    engaged: np.ndarray
    target_force: np.ndarray
    stroke: np.ndarray
    muscle_force: np.ndarray

    @property
    def tau_unassisted(self) -> np.ndarray:
        """Human torques for the same motion without the device."""
        out = self.tau_human.copy()
        out[:, 1] -= self.tau_ext
        return out

    def summary(self) -> dict:
        """Peak and integrated extensor moments (N*m, positive = extension)."""
        ext = -self.tau_human
        base = -self.tau_unassisted
        dt = self.t[1] - self.t[0]
        peak_l = float(np.max(ext[:, 1]))
        peak_l0 = float(np.max(base[:, 1]))
        return {
            "peak_hip_extensor_Nm": float(np.max(ext[:, 0])),
            "peak_lumbar_extensor_Nm": peak_l,
            "peak_lumbar_extensor_unassisted_Nm": peak_l0,
            "integrated_hip_abs_Nms": float(trapezoid(np.abs(ext[:, 0]), dx=dt)),
            "integrated_lumbar_abs_Nms": float(trapezoid(np.abs(ext[:, 1]), dx=dt)),
            "peak_tau_ext_Nm": float(np.max(self.tau_ext)),
            "peak_muscle_force_N": float(np.max(self.muscle_force)),
            "min_sensor_pressure_Pa": float(np.min(self.sensor_pressure)),
            "engaged_fraction": float(np.mean(self.engaged)),
            "lumbar_reduction_pct": 100.0 * (1.0 - peak_l / peak_l0) if peak_l0 > 0 else 0.0,
        }


def closed_loop_run(scenario: "ScenarioConfig") -> RunResult:
    """Simulate one lift cycle with the sensor-driven assist in the loop."""
    tr = scenario.trajectory
    cfg = scenario.controller
    traj = lift_trajectory(tr.peak_hip, tr.peak_lumbar, tr.duration, tr.dt)
    n = len(traj.t)

    gain = cfg.lumbar_strain_gain
    if gain is None:
        gain = cfg.strain_max / tr.peak_lumbar if tr.peak_lumbar > 0 else 0.0
    strain = np.maximum(gain * traj.theta[:, 1], 0.0)
    s_hi = strain_limit(scenario.sensor)
    over = strain > s_hi
    if over.any():
        k = int(np.argmax(over))
        raise SimulationError(k, OutOfCalibratedRange(
            f"spinal strain {strain[k]:.4g} exceeds the sensor range {s_hi:.4g}"))
    try:
        pressure = pressure_at_strain(scenario.sensor, strain)
    except ExosimError as exc:
        bad = _first_bad_step(scenario.sensor, strain)
        raise SimulationError(bad, exc) from exc

    full = scenario.syringe.full_stroke
    if scenario.assist_enabled:
        engaged, frac = _force_fraction(cfg, scenario.sensor, pressure)
    else:
        engaged, frac = np.zeros(n, dtype=bool), np.zeros(n)
    target = cfg.F_max * frac
    stroke = kernels.rate_limit(np.ascontiguousarray(frac * full), 0.0,
                                cfg.stroke_rate * tr.dt)
    force = cfg.F_max * stroke / full
    tau_ext = assist_torque(force, cfg.moment_arm)
    tau = inverse_dynamics_trajectory(scenario.model, traj.theta, traj.theta_dot,
                                      traj.theta_ddot, tau_ext=tau_ext)
    finite = np.isfinite(tau).all(axis=1)
    if not finite.all():
        k = int(np.argmin(finite))
        raise SimulationError(k, FloatingPointError("non-finite joint torque"))
    return RunResult(traj.t, traj.theta, traj.theta_dot, traj.theta_ddot, tau, tau_ext,
                     strain, pressure, engaged, target, stroke, force)


def _first_bad_step(geom, strain):
    for k, s in enumerate(strain):
        try:
            pressure_at_strain(geom, s)
        except ExosimError:
            return k
    return -1
