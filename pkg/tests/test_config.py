import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exosim.config import (SCALAR_KEYS, ScenarioConfig, default_config, default_config_text,
                           dump_config, load_config, parse_config, set_scalar)
from exosim.errors import ConfigError


def test_bundled_default_matches_code_defaults():
    assert default_config() == ScenarioConfig()


def test_round_trip_fixed_point():
    cfg = default_config()
    text = dump_config(cfg)
    assert parse_config(text) == cfg
    assert dump_config(parse_config(text)) == text


@settings(max_examples=50, deadline=None)
@given(load=st.floats(0, 40), arm=st.floats(0.01, 0.3), dt=st.floats(1e-4, 0.01),
       seed=st.integers(0, 2**31))
def test_round_trip_random_values(load, arm, dt, seed):
    cfg = ScenarioConfig()
    cfg = set_scalar(cfg, "scenario.load_mass_kg", load)
    cfg = set_scalar(cfg, "controller.moment_arm_m", arm)
    cfg = set_scalar(cfg, "trajectory.dt_s", dt)
    cfg = set_scalar(cfg, "scenario.seed", seed)
    assert parse_config(dump_config(cfg)) == cfg


def test_partial_config_uses_defaults():
    cfg = parse_config("[scenario]\nload_mass_kg = 10\n")
    assert cfg.load_mass == 10.0
    assert cfg.replace(load_mass=5.0) == ScenarioConfig()


def test_auto_gain_and_explicit_gain():
    assert parse_config("[controller]\nlumbar_strain_gain_per_rad = auto\n").controller \
        .lumbar_strain_gain is None
    assert parse_config("[controller]\nlumbar_strain_gain_per_rad = 0.5\n").controller \
        .lumbar_strain_gain == 0.5


def test_dt_bound_reported_with_location():
    text = default_config_text().replace("dt_s = 0.001", "dt_s = 0.1")
    with pytest.raises(ConfigError, match=r"dt_s must lie in \(0, 0.01\]") as info:
        parse_config(text, "cfg.ini")
    assert "cfg.ini:" in str(info.value) and "[trajectory]" in str(info.value)


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError, match=r"x.ini:3: \[scenario\] load_kg: unknown key"):
        parse_config("[scenario]\nname = a\nload_kg = 5\n", "x.ini")


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[extras]\na = 1\n")


@pytest.mark.parametrize("text,match", [
    ("[scenario]\nload_mass_kg = heavy\n", "cannot parse 'heavy' as float"),
    ("[scenario]\nassist_enabled = maybe\n", "as bool"),
    ("[scenario]\nload_mass_kg = nan\n", "as float"),
    ("[scenario]\nload_mass_kg = -1\n", "load_mass_kg must be >= 0"),
    ("[anthropometrics]\nl1_m = 0\n", "l1"),
    ("[scenario\n", "no section headers"),
])
def test_bad_values(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_set_scalar():
    cfg = set_scalar(ScenarioConfig(), "controller.moment_arm_m", 0.1)
    assert cfg.controller.moment_arm == 0.1
    assert set_scalar(cfg, "muscle.n_muscles", 3.0).muscle.n_muscles == 3
    with pytest.raises(ConfigError):
        set_scalar(cfg, "scenario.name", 1)
    with pytest.raises(ConfigError):
        set_scalar(cfg, "trajectory.dt_s", 1.0)


def test_scalar_keys_cover_sweepable_fields():
    assert "scenario.load_mass_kg" in SCALAR_KEYS
    assert "controller.moment_arm_m" in SCALAR_KEYS
    assert "scenario.name" not in SCALAR_KEYS


def test_model_includes_load():
    assert ScenarioConfig(load_mass=7.0).model.m_load == 7.0
    assert np.isclose(ScenarioConfig().trajectory.peak_hip, np.pi / 4)


def test_dump_handles_numpy_scalars():
    cfg = set_scalar(ScenarioConfig(), "scenario.load_mass_kg", 2.5)
    cfg = cfg.replace(load_mass=np.float64(2.5))
    text = dump_config(cfg)
    assert "load_mass_kg = 2.5\n" in text
    assert parse_config(text) == cfg
