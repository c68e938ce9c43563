# tests/test_settings.py
import json

import pytest

from common.errors import ConfigError
from common.settings import RunConfig, get_settings, load_run_config, set_settings


def test_defaults():
    cfg = RunConfig()
    assert cfg.grid_density == 2048
    assert cfg.samples_per_turn == 128
    assert cfg.margin_tol == pytest.approx(1e-3)
    assert cfg.delta == pytest.approx(0.05)
    assert cfg.n_max == 256


def test_file_then_overrides(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({"margin_tol": 0.01, "delta": 0.1, "unknown_key": 1}))

    cfg = load_run_config(p)
    assert cfg.margin_tol == pytest.approx(0.01)
    assert cfg.delta == pytest.approx(0.1)

    cfg = load_run_config(p, margin_tol=0.02, delta=None)
    assert cfg.margin_tol == pytest.approx(0.02)
    assert cfg.delta == pytest.approx(0.1)


def test_config_from_env_var(tmp_path, monkeypatch):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({"n_max": 32}))
    monkeypatch.setenv("NONDEG_CONFIG", str(p))
    assert load_run_config().n_max == 32


def test_environment_alias(monkeypatch):
    monkeypatch.setenv("NONDEG_GRID_DENSITY", "512")
    assert load_run_config().grid_density == 512


@pytest.mark.parametrize("payload", ['{"delta": -1}', '{"n_max": 1}', '{"log_level": "LOUD"}', "not json", "[1, 2]"])
def test_invalid_config(tmp_path, payload):
    p = tmp_path / "bad.json"
    p.write_text(payload)
    with pytest.raises(ConfigError) as e:
        load_run_config(p)
    assert e.value.exit_code == 3


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "nope.json")


def test_set_settings_returns_previous():
    cfg = RunConfig(margin_tol=0.5)
    prev = set_settings(cfg)
    try:
        assert get_settings() is cfg
    finally:
        set_settings(prev)
    assert get_settings() is prev


def test_echo_uses_field_names():
    echo = RunConfig().echo()
    assert "grid_density" in echo and "NONDEG_GRID_DENSITY" not in echo
