"""Scenario configuration: INI text with one section per component.

Every physical key carries its SI unit as a suffix (``load_mass_kg``,
``dt_s``). ``dump_config`` writes floats with ``repr`` so parse -> dump ->
parse is a fixed point.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .control import ControllerConfig
from .dynamics import FIXTURE, AnthropometricModel
from .errors import ConfigError
from .muscle import MuscleParams, SyringeParams
from .sensor import DEFAULT_GEOMETRY, SensorGeometry


@dataclass(frozen=True)
class TrajectorySpec:
    peak_hip: float = float(np.pi / 4)
    peak_lumbar: float = float(np.radians(15.0))
    duration: float = 4.0
    dt: float = 1e-3

    def __post_init__(self):
        if not (0 < self.dt <= 0.01):
            raise ValueError(f"dt_s must lie in (0, 0.01] s, got {self.dt!r}")
        if not self.duration >= 2 * self.dt:
            raise ValueError(f"duration_s must be >= 2*dt_s, got {self.duration!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    anthropometrics: AnthropometricModel = FIXTURE
    muscle: MuscleParams = field(default_factory=MuscleParams)
    syringe: SyringeParams = field(default_factory=SyringeParams)
    sensor: SensorGeometry = DEFAULT_GEOMETRY
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    load_mass: float = 5.0
    assist_enabled: bool = True
    output_dir: str = "runs"
    seed: int = 0
    name: str = "default"

    def __post_init__(self):
        if not (np.isfinite(self.load_mass) and self.load_mass >= 0):
            raise ValueError(f"load_mass_kg must be >= 0, got {self.load_mass!r}")
        if self.controller.threshold >= self.sensor.P_init:
            raise ValueError("controller threshold must be below the sensor's P_init")

    @property
    def model(self) -> AnthropometricModel:
        return self.anthropometrics.with_load(self.load_mass)

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)


# section -> (attribute on ScenarioConfig or None for top level, [(ini key, field, type)])
_SCHEMA = {
    "scenario": (None, [
        ("name", "name", str),
        ("load_mass_kg", "load_mass", float),
        ("assist_enabled", "assist_enabled", bool),
        ("output_dir", "output_dir", str),
        ("seed", "seed", int),
    ]),
    "trajectory": ("trajectory", [
        ("peak_hip_rad", "peak_hip", float),
        ("peak_lumbar_rad", "peak_lumbar", float),
        ("duration_s", "duration", float),
        ("dt_s", "dt", float),
    ]),
    "anthropometrics": ("anthropometrics", [
        ("l1_m", "l1", float), ("l2_m", "l2", float),
        ("m1_kg", "m1", float), ("m2_kg", "m2", float),
        ("r1_m", "r1", float), ("r2_m", "r2", float),
        ("I1_kgm2", "I1", float), ("I2_kgm2", "I2", float),
        ("g_mps2", "g", float),
    ]),
    "muscle": ("muscle", [
        ("alpha", "alpha", float), ("E_mod_Pa", "E_mod", float),
        ("A_t_m2", "A_t", float), ("k_c_Npm", "k_c", float),
        ("l_i_m", "l_i", float), ("d_o_m", "d_o", float),
        ("n_muscles", "n_muscles", int),
    ]),
    "syringe": ("syringe", [
        ("A_piston_m2", "A_piston", float), ("V_max_m3", "V_max", float),
        ("V_stroke_m3", "V_stroke", float),
    ]),
    "sensor": ("sensor", [
        ("d1_m", "d1", float), ("d2_m", "d2", float), ("g_i_m", "g_i", float),
        ("phi_c_rad", "phi_c", float), ("P_init_Pa", "P_init", float),
        ("T_wall_m", "T_wall", float), ("S_allow_Pa", "S_allow", float),
        ("D_tube_m", "D_tube", float), ("strain_offset", "strain_offset", float),
    ]),
    "controller": ("controller", [
        ("threshold_Pa", "threshold", float), ("F_max_N", "F_max", float),
        ("strain_max", "strain_max", float), ("moment_arm_m", "moment_arm", float),
        ("lumbar_strain_gain_per_rad", "lumbar_strain_gain", "optfloat"),
        ("stroke_rate_mps", "stroke_rate", float),
    ]),
}

# keys accepted by `sweep`, as section.key
SCALAR_KEYS = tuple(f"{sec}.{k}" for sec, (_, fields) in _SCHEMA.items()
                    for k, _, typ in fields if typ in (float, int, "optfloat"))


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return i
        elif current == section and key is not None:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return i
    return None


def _where(source, text, section, key=None) -> str:
    line = _line_of(text, section, key) if text else None
    loc = f"{source}:{line}" if line else source
    return f"{loc}: [{section}]" + (f" {key}" if key else "")


def _convert(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "optfloat":
            return None if raw in ("", "auto", "none") else float(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            v = float(raw)
            if not np.isfinite(v):
                raise ValueError(raw)
            return v
        return raw
    except ValueError:
        name = typ if isinstance(typ, str) else typ.__name__
        raise ConfigError(f"{where}: cannot parse {raw!r} as {name}") from None


def _defaults_of(cfg: ScenarioConfig, attr):
    return cfg if attr is None else getattr(cfg, attr)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    """Parse INI text; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " ")) from None

    base = ScenarioConfig()
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"{_where(source, text, sec)}: unknown section")
        known = {k for k, _, _ in _SCHEMA[sec][1]}
        for key in cp[sec]:
            if key not in known:
                raise ConfigError(f"{_where(source, text, sec, key)}: unknown key "
                                  f"(expected one of {', '.join(sorted(known))})")

    parts = {}
    top = {}
    for sec, (attr, fields) in _SCHEMA.items():
        current = _defaults_of(base, attr)
        values = {}
        for key, fname, typ in fields:
            if cp.has_option(sec, key):
                values[fname] = _convert(cp.get(sec, key), typ,
                                         _where(source, text, sec, key))
        if attr is None:
            top.update(values)
            continue
        try:
            parts[attr] = dataclasses.replace(current, **values)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{_where(source, text, sec)}: {exc}") from None
    try:
        return dataclasses.replace(base, **parts, **top)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))  # plain repr, also for numpy scalars
    return str(v)


def dump_config(cfg: ScenarioConfig) -> str:
    out = []
    for sec, (attr, fields) in _SCHEMA.items():
        obj = _defaults_of(cfg, attr)
        out.append(f"[{sec}]")
        for key, fname, _ in fields:
            out.append(f"{key} = {_fmt(getattr(obj, fname))}")
        out.append("")
    return "\n".join(out)


def set_scalar(cfg: ScenarioConfig, dotted: str, value) -> ScenarioConfig:
    """Return a copy of ``cfg`` with ``section.key`` set to ``value``."""
    sec, _, key = dotted.partition(".")
    if dotted not in SCALAR_KEYS:
        raise ConfigError(f"unknown scalar key {dotted!r}")
    attr, fields = _SCHEMA[sec]
    fname, typ = next((f, t) for k, f, t in fields if k == key)
    value = int(value) if typ is int else float(value)
    try:
        if attr is None:
            return dataclasses.replace(cfg, **{fname: value})
        return dataclasses.replace(cfg, **{attr: dataclasses.replace(getattr(cfg, attr),
                                                                     **{fname: value})})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{dotted}={value}: {exc}") from None


def default_config_text() -> str:
    return resources.files("exosim").joinpath("data/default.ini").read_text()


def default_config() -> ScenarioConfig:
    return parse_config(default_config_text(), "default.ini")
