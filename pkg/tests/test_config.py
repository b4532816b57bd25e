import json
from pathlib import Path

import pytest

from sol_kernel.utils.config import Settings, load_settings, parse_int_range
from sol_kernel.utils.converters import complex_to_json, format_complex
from sol_kernel.utils.log import debug_enabled, log_debug, set_debug


def write_config(tmp_path, settings):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"settings": settings}), encoding="utf-8")
    return str(path)


@pytest.mark.parametrize("text, expected", [("-20..40", (-20, 40)), ("0..0", (0, 0)), ("-5..-1", (-5, -1))])
def test_parse_int_range(text, expected):
    assert parse_int_range(text) == expected


@pytest.mark.parametrize("text", ["1..2..3", "12", "a..b"])
def test_parse_int_range_rejects(text):
    with pytest.raises(ValueError):
        parse_int_range(text)


def test_defaults_without_config(monkeypatch):
    monkeypatch.delenv("SOL_CONFIG", raising=False)
    assert load_settings() == Settings()


def test_load_settings_from_file(tmp_path):
    settings = load_settings(write_config(tmp_path, {"int_range": "-20..40", "samples": 5, "mode": "sampling"}))
    assert settings.int_range == (-20, 40)
    assert settings.samples == 5
    assert settings.mode == "sampling"
    assert settings.tolerance == Settings().tolerance


def test_load_settings_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SOL_CONFIG", write_config(tmp_path, {"int_range": [0, 3]}))
    assert load_settings().int_range == (0, 3)


def test_unknown_setting_is_ignored(tmp_path, capsys):
    settings = load_settings(write_config(tmp_path, {"colour": "blue", "seed": 4}))
    assert settings.seed == 4
    assert "[WARNING] Ignoring unknown setting 'colour'" in capsys.readouterr().err


def test_example_config_loads():
    settings = load_settings(str(Path(__file__).parent.parent / "config.example.json"))
    assert settings.to_dict() == Settings().to_dict()


@pytest.mark.parametrize("overrides", [
    {"int_range": (3, 1)},
    {"samples": 0},
    {"tolerance": 0.0},
    {"mode": "guess"},
    {"workers": 0},
    {"max_dim": 0},
    {"max_states": -1},
    {"int_limit": 0},
])
def test_invalid_settings(overrides):
    with pytest.raises(ValueError):
        Settings(**overrides)


def test_with_overrides_skips_none():
    base = Settings(seed=3)
    updated = base.with_overrides(seed=None, samples=7, int_range=[1, 2])
    assert updated.seed == 3
    assert updated.samples == 7
    assert updated.int_range == (1, 2)
    assert base.samples == 20


def test_to_dict_is_json_ready():
    data = Settings().to_dict()
    assert data["int_range"] == [-64, 64]
    json.dumps(data)


def test_complex_formatting():
    assert complex_to_json(1 / 3 + 2j) == [0.333333333333, 2.0]
    assert format_complex(1 + 0j) == "1"
    assert format_complex(1 - 2j) == "(1-2i)"
    assert format_complex(0.5j) == "0.5i"


def test_debug_toggle(monkeypatch, capsys):
    monkeypatch.delenv("SOL_DEBUG", raising=False)
    set_debug(True)
    assert debug_enabled()
    log_debug("visible")
    set_debug(False)
    assert not debug_enabled()
    log_debug("hidden")
    err = capsys.readouterr().err
    assert "[DEBUG] visible" in err
    assert "hidden" not in err


def test_debug_env_wins_over_settings(monkeypatch):
    monkeypatch.setenv("SOL_DEBUG", "1")
    set_debug(False)
    assert debug_enabled()
    monkeypatch.delenv("SOL_DEBUG")
    set_debug(False)
    assert not debug_enabled()
