"""Hydraulic filament muscle force law, pressure requirement and syringe drive."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (DegenerateGeometry, ElongationOutOfRange, InsufficientData,
                     StrokeOutOfRange)

# Strain reached when the full working volume has been displaced.
FULL_STROKE_STRAIN = 0.20
ELONGATION_CAP = 0.5


@dataclass(frozen=True)
class MuscleParams:
    """Per-muscle parameters; ``n_muscles`` identical muscles act in parallel.

    Only ``k_c``, ``E_mod`` and ``n_muscles`` have published values. The
    defaults for ``alpha``, ``A_t``, ``l_i`` and ``d_o`` are placeholders.
    """

    alpha: float = 0.5
    E_mod: float = 1.2556e6
    A_t: float = 3e-6
    k_c: float = 126.0
    l_i: float = 0.3
    d_o: float = 2e-3
    n_muscles: int = 5

    def __post_init__(self):
        for name in ("alpha", "E_mod", "A_t", "k_c", "l_i", "d_o"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if int(self.n_muscles) != self.n_muscles or self.n_muscles < 1:
            raise ValueError(f"n_muscles must be an integer >= 1, got {self.n_muscles!r}")
        if np.pi / 4 * self.d_o**2 <= self.alpha * self.A_t:
            raise ValueError("pi/4 * d_o^2 must exceed alpha * A_t")

    @property
    def elastic_product(self) -> float:
        return self.alpha * self.A_t


@dataclass(frozen=True)
class SyringeParams:
    A_piston: float = 55.4e-6
    V_max: float = 3e-6
    V_stroke: float = 2e-6

    def __post_init__(self):
        if not self.A_piston > 0:
            raise ValueError("A_piston must be > 0")
        if not (0 < self.V_stroke <= self.V_max):
            raise ValueError("need 0 < V_stroke <= V_max")

    @property
    def full_stroke(self) -> float:
        """Piston travel (m) that displaces the working volume."""
        return self.V_stroke / self.A_piston


def _stretch_term(p: MuscleParams, x):
    return 1.0 - 1.0 / (1.0 + x / p.l_i)


def muscle_force(p: MuscleParams, x, elastic_product: float | None = None):
    """Output force of one muscle (N) at elongation ``x`` (m).

    ``elastic_product`` overrides alpha*A_t, e.g. with a calibrated value.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(x_arr > ELONGATION_CAP * p.l_i) or not np.all(np.isfinite(x_arr)):
        raise ElongationOutOfRange(
            f"elongation must lie in [0, {ELONGATION_CAP * p.l_i:g}] m")
    ea = p.elastic_product if elastic_product is None else elastic_product
    f = ea * p.E_mod * _stretch_term(p, x_arr) + p.k_c * x_arr
    return float(f) if f.ndim == 0 else f


def required_pressure(p: MuscleParams, F_out, x):
    """Fluid pressure (Pa) that holds one muscle at force ``F_out`` and elongation ``x``.

    With validated parameters the denominator is always positive; the check
    guards parameter objects assembled without validation.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > ELONGATION_CAP * p.l_i) or not np.all(np.isfinite(x)):
        raise ElongationOutOfRange(
            f"elongation must lie in [0, {ELONGATION_CAP * p.l_i:g}] m")
    denom = np.pi / 4 * p.d_o**2 - p.elastic_product / (1.0 + x / p.l_i)
    if np.any(denom <= 0):
        raise DegenerateGeometry("pi/4*d_o^2 <= alpha*A_t/(1+x/l_i)")
    P = np.asarray(F_out, dtype=float) / denom
    return float(P) if P.ndim == 0 else P


def actuator_thrust(P, s: SyringeParams, n_muscles: int = 1):
    """Linear actuator thrust (N) to hold ``n_muscles`` circuits at pressure ``P``."""
    if np.any(np.asarray(P) < 0):
        raise ValueError("pressure must be >= 0")
    return n_muscles * P * s.A_piston


def stroke_to_strain(s: SyringeParams, stroke):
    stroke = np.asarray(stroke, dtype=float)
    if np.any(stroke < 0) or np.any(stroke > s.full_stroke * (1 + 1e-12)):
        raise StrokeOutOfRange(f"stroke must lie in [0, {s.full_stroke:.6g}] m")
    strain = FULL_STROKE_STRAIN * stroke * s.A_piston / s.V_stroke
    return float(strain) if strain.ndim == 0 else strain


def strain_to_stroke(s: SyringeParams, strain):
    strain = np.asarray(strain, dtype=float)
    if np.any(strain < 0) or np.any(strain > FULL_STROKE_STRAIN * (1 + 1e-12)):
        raise StrokeOutOfRange(f"strain must lie in [0, {FULL_STROKE_STRAIN}]")
    stroke = strain / FULL_STROKE_STRAIN * s.full_stroke
    return float(stroke) if stroke.ndim == 0 else stroke


@dataclass(frozen=True)
class ElasticFit:
    elastic_product: float
    rms_residual: float
    clamped: bool
    n_samples: int


def calibrate_elastic_term(samples, p: MuscleParams) -> ElasticFit:
    """Least-squares fit of alpha*A_t to (elongation, force) samples.

    The spring term uses ``p.k_c`` as given; the remaining force is linear in
    the product, so the fit is closed form. A negative optimum is clamped to
    zero with a warning.
    """
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    x, F = arr[:, 0], arr[:, 1]
    if len(arr) < 3 or len(np.unique(x)) < 3:
        raise InsufficientData("need at least 3 samples with distinct elongations")
    if np.any(x < 0) or np.any(x > ELONGATION_CAP * p.l_i):
        raise ElongationOutOfRange("sample elongation outside model range")
    basis = p.E_mod * _stretch_term(p, x)
    y = F - p.k_c * x
    denom = basis @ basis
    if denom <= 0:
        raise InsufficientData("all samples at zero elongation")
    beta = (basis @ y) / denom
    clamped = beta < 0
    if clamped:
        warnings.warn("fitted alpha*A_t was negative; clamped to 0", RuntimeWarning,
                      stacklevel=2)
        beta = 0.0
    resid = y - beta * basis
    return ElasticFit(float(beta), float(np.sqrt(np.mean(resid**2))), bool(clamped), len(arr))


def read_force_csv(path) -> np.ndarray:
    """Two-column CSV with header ``elongation_m,force_N``."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header != ["elongation_m", "force_N"]:
        raise ValueError(f"{path}: header must be 'elongation_m,force_N', got {','.join(header)!r}")
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
