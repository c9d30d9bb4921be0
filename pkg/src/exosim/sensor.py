"""Knitted hydraulic strain sensor: pressure-strain geometry and calibration.

The sensor path is a chain of identical knit repeats, each made of a loop
arc, a tangent segment and a knot arc. Stretching tightens the loops and
lengthens the tangents. With the tube's radius held by the helical coil the
trapped fluid pressure scales inversely with the repeat length::

    P'(s) = P_init * L(0) / L(s)

The loop angles are read off tangent-line ("belt over pulley") geometry:
``phi_d = atan(d1 / d2)`` is the inclination of the line between loop
centres and ``phi_i = asin(g / c)`` is the contact angle of the tangent from
the midpoint at distance ``c = sqrt(d1^2 + d2^2) / 2``. Stretched angles use
``g_p`` and ``d2 + delta_d``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, least_squares

from . import _kernels_numpy, kernels
from .errors import (FitDiverged, GeometryCollapse, InsufficientData, InvalidWall,
                     OutOfCalibratedRange)

# Strain beyond which the linear-elastic tube assumption is not trusted.
STRAIN_CAP = 0.5
SENSITIVITY_SPAN = 0.20


@dataclass(frozen=True)
class SensorGeometry:
    d1: float
    d2: float
    g_i: float
    phi_c: float
    P_init: float = 300e3
    T_wall: float = 0.5e-3
    S_allow: float = 2.5e6
    D_tube: float = 2e-3
    strain_offset: float = 0.0

    def __post_init__(self):
        for name in ("d1", "d2", "g_i", "P_init", "T_wall", "S_allow", "D_tube"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if not (0 < self.phi_c < np.pi / 2):
            raise ValueError(f"phi_c must lie in (0, pi/2), got {self.phi_c!r}")
        if (self.d1**2 + self.d2**2) / 4 <= self.g_i**2:
            raise ValueError("(d1^2 + d2^2)/4 must exceed g_i^2 (no tangent segment)")
        if not (0 <= self.strain_offset < STRAIN_CAP):
            raise ValueError("strain_offset must lie in [0, 0.5)")
        if not np.isfinite(_kernels_numpy._path_length(self.packed(), 0.0)):
            raise ValueError("loop arc angle is not positive at rest")

    def packed(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.g_i, self.phi_c, self.P_init])


@dataclass(frozen=True)
class StretchedLoop:
    strain: float
    delta_d: float
    g_p: float


def stretch_geometry(geom: SensorGeometry, strain: float) -> StretchedLoop:
    if strain < 0:
        raise ValueError("strain must be >= 0")
    dd = strain * (2 * geom.g_i * np.cos(geom.phi_c) + geom.d2)
    D0 = (geom.d1**2 + geom.d2**2) / 4
    gp2 = (dd / 2)**2 + geom.g_i**2 - ((strain + 1)**2 - 1) * (D0 - geom.g_i**2)
    if gp2 <= 0:
        raise GeometryCollapse(f"g_p^2 = {gp2:.4g} <= 0 at strain {strain:g}")
    return StretchedLoop(float(strain), float(dd), float(np.sqrt(gp2)))


def loop_path_length(geom: SensorGeometry, strain):
    """Length of one knit repeat; NaN where the geometry cannot stretch that far."""
    return _kernels_numpy._path_length(geom.packed(), strain)


def strain_limit(geom: SensorGeometry, cap: float = STRAIN_CAP) -> float:
    """Largest strain up to ``cap`` for which every smaller strain is valid."""
    grid = np.linspace(0.0, cap, 2001)
    ok = np.isfinite(loop_path_length(geom, grid))
    if ok.all():
        return cap
    first_bad = int(np.argmin(ok))
    lo, hi = grid[first_bad - 1], grid[first_bad]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.isfinite(loop_path_length(geom, mid)):
            lo = mid
        else:
            hi = mid
    return float(lo)


def pressure_at_strain(geom: SensorGeometry, strain):
    """Sensor pressure (Pa) at axial strain; accepts scalars or arrays."""
    s = np.asarray(strain, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("strain must be finite and >= 0")
    eff = np.maximum(s - geom.strain_offset, 0.0)
    P = kernels.sensor_pressure_batch(geom.packed(), np.ascontiguousarray(eff.ravel()))
    if not np.all(np.isfinite(P)):
        bad = float(s.ravel()[~np.isfinite(P)][0])
        raise GeometryCollapse(f"geometry cannot accommodate strain {bad:g}")
    P = P.reshape(s.shape)
    return float(P) if P.ndim == 0 else P


def strain_from_pressure(geom: SensorGeometry, P_meas):
    """Invert the forward model by bisection; accepts scalars or arrays."""
    p = np.asarray(P_meas, dtype=float)
    s_hi = strain_limit(geom)
    p_lo = pressure_at_strain(geom, s_hi)
    if np.any(p > geom.P_init) or np.any(p < p_lo) or not np.all(np.isfinite(p)):
        raise OutOfCalibratedRange(
            f"pressure must lie in [{p_lo:.6g}, {geom.P_init:.6g}] Pa")
    eff = kernels.sensor_strain_batch(geom.packed(), np.ascontiguousarray(p.ravel()),
                                      s_hi - geom.strain_offset)
    s = np.where(eff > 0, eff + geom.strain_offset, 0.0).reshape(p.shape)
    return float(s) if s.ndim == 0 else s


def barlow_pressure(T_wall: float, S_allow: float, D_tube: float) -> float:
    """Allowable inner pressure of a thin-walled tube, 2*T*S/D."""
    if T_wall <= 0 or S_allow <= 0 or D_tube <= 0:
        raise ValueError("wall thickness, stress and diameter must be > 0")
    if T_wall >= D_tube / 2:
        raise InvalidWall(f"wall thickness {T_wall:g} >= half diameter {D_tube / 2:g}")
    return 2 * T_wall * S_allow / D_tube


def sensitivity(geom: SensorGeometry) -> float:
    """Mean pressure drop per percent strain over 0-20 %, in kPa/%."""
    drop = geom.P_init - pressure_at_strain(geom, SENSITIVITY_SPAN)
    return drop / 1e3 / (SENSITIVITY_SPAN * 100)


def calibrate_to_anchors(d1: float, d2: float, phi_c: float, P_init: float = 300e3,
                         strain: float = 0.20, pressure: float = 210e3,
                         **extra) -> SensorGeometry:
    """Solve for the loop radius that puts ``pressure`` at ``strain``.

    d1, d2 and phi_c are held; g_i is found by Brent's method between the
    smallest radius that survives the stretch and the no-tangent limit.
    The result must also be monotone on [0, strain].
    """
    g_max = np.sqrt(d1**2 + d2**2) / 2
    grid = np.linspace(1e-3, 1 - 1e-6, 4000) * g_max

    def resid(g):
        try:
            geom = SensorGeometry(d1, d2, g, phi_c, P_init, **extra)
        except ValueError:
            return np.nan
        L = loop_path_length(geom, np.array([0.0, strain]))
        return P_init * L[0] / L[1] - pressure

    vals = np.array([resid(g) for g in grid])
    idx = np.flatnonzero(np.isfinite(vals[:-1]) & np.isfinite(vals[1:])
                        & (np.sign(vals[:-1]) != np.sign(vals[1:])))
    for i in idx:
        g = brentq(resid, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-14)
        geom = SensorGeometry(d1, d2, g, phi_c, P_init, **extra)
        P = pressure_at_strain(geom, np.linspace(0, strain, 201))
        if np.all(np.diff(P) < 0):
            return geom
    raise FitDiverged("no monotone geometry reaches the requested anchor")


# Synthetic default: g_i from calibrate_to_anchors(3e-3, 4e-3, pi/6), which
# puts 210 kPa at 20 % strain (90 kPa drop, 4.5 kPa/%).
DEFAULT_GEOMETRY = SensorGeometry(d1=3e-3, d2=4e-3, g_i=2.2764576540538705e-3,
                                  phi_c=np.pi / 6)


@dataclass(frozen=True)
class FitReport:
    geometry: SensorGeometry
    r_squared: float
    residuals: np.ndarray
    n_samples: int
    nfev: int
    notes: tuple = ()

    def as_text(self) -> str:
        g = self.geometry
        lines = [
            "sensor geometry fit",
            f"samples        {self.n_samples}",
            f"d1_m           {g.d1:.9g}",
            f"d2_m           {g.d2:.9g}",
            f"g_i_m          {g.g_i:.9g}",
            f"phi_c_rad      {g.phi_c:.9g}",
            f"strain_offset  {g.strain_offset:.9g}",
            f"P_init_Pa      {g.P_init:.9g}",
            f"r_squared      {self.r_squared:.9g}",
            f"rms_resid_Pa   {np.sqrt(np.mean(self.residuals**2)):.9g}",
            f"max_resid_Pa   {np.max(np.abs(self.residuals)):.9g}",
            f"evaluations    {self.nfev}",
        ]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _sigmoid(u):
    return 1.0 / (1.0 + np.exp(-u))


def _logit(p):
    return np.log(p / (1.0 - p))


def fit_geometry(samples, seed_geom: SensorGeometry, fit_offset: bool = False,
                 max_iter: int = 500) -> FitReport:
    """Nonlinear least squares of (d2, g_i, phi_c[, strain_offset]) to samples.

    The pressure ratio is unchanged when every length is scaled together, so
    d1 is held at the seed value to fix the scale. Parameters are mapped
    through unconstrained coordinates so every trial geometry is valid.
    """
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    s, P = arr[:, 0], arr[:, 1]
    if len(arr) < 6:
        raise InsufficientData(f"need >= 6 samples, got {len(arr)}")
    if s.max() - s.min() < 0.10:
        raise InsufficientData("samples must span at least 10 % strain")
    if np.any(s < 0):
        raise InsufficientData("negative strain in samples")
    ss_tot = np.sum((P - P.mean())**2)
    if ss_tot <= 0 or np.ptp(P) <= 1e-9 * abs(P.mean()):
        raise FitDiverged("pressure does not respond to strain; nothing to fit")

    d1 = seed_geom.d1
    extra = dict(P_init=seed_geom.P_init, T_wall=seed_geom.T_wall,
                 S_allow=seed_geom.S_allow, D_tube=seed_geom.D_tube)

    def unpack(u):
        d2 = d1 * np.exp(u[0])
        g = np.sqrt((d1**2 + d2**2) / 4) * _sigmoid(u[1])
        pc = np.pi / 2 * _sigmoid(u[2])
        off = 0.4 * _sigmoid(u[3]) if fit_offset else 0.0
        return d2, g, pc, off

    def resid(u):
        d2, g, pc, off = unpack(u)
        sp = np.array([d1, d2, g, pc, seed_geom.P_init])
        model = _kernels_numpy.sensor_pressure_batch(sp, np.maximum(s - off, 0.0))
        if not np.all(np.isfinite(model)):
            return np.full_like(P, seed_geom.P_init)
        return (model - P) / seed_geom.P_init

    u0 = [np.log(seed_geom.d2 / d1),
          _logit(seed_geom.g_i / np.sqrt((d1**2 + seed_geom.d2**2) / 4)),
          _logit(seed_geom.phi_c / (np.pi / 2))]
    u0.append(_logit(min(max(seed_geom.strain_offset, 1e-3), 0.399) / 0.4))
    u0 = np.asarray(u0 if fit_offset else u0[:3] + [0.0])
    n_free = 4 if fit_offset else 3

    def resid_free(v):
        return resid(np.concatenate([v, u0[n_free:]]))

    try:
        sol = least_squares(resid_free, u0[:n_free], method="trf", x_scale="jac",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iter)
    except (ValueError, FloatingPointError) as exc:
        raise FitDiverged(str(exc)) from None
    if sol.status == 0 or not np.all(np.isfinite(sol.x)):
        raise FitDiverged(f"no convergence within {max_iter} evaluations")
    d2, g, pc, off = unpack(np.concatenate([sol.x, u0[n_free:]]))
    try:
        geom = SensorGeometry(d1, d2, g, pc, strain_offset=off, **extra)
        model = pressure_at_strain(geom, s)
    except (ValueError, GeometryCollapse) as exc:
        raise FitDiverged(f"fit left the valid region: {exc}") from None
    res = P - model
    r2 = 1.0 - np.sum(res**2) / ss_tot
    notes = ["overall length scale is not identifiable; d1 held at seed value"]
    return FitReport(geom, float(r2), res, len(arr), int(sol.nfev), tuple(notes))


def read_pressure_csv(path) -> np.ndarray:
    """Two-column CSV with header ``strain_fraction,pressure_Pa``."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header != ["strain_fraction", "pressure_Pa"]:
        raise ValueError(
            f"{path}: header must be 'strain_fraction,pressure_Pa', got {','.join(header)!r}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            out.append((float(row[0]), float(row[1])))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    return np.array(out, dtype=float).reshape(-1, 2)


def with_pressure(geom: SensorGeometry, P_init: float) -> SensorGeometry:
    return replace(geom, P_init=P_init)
