from __future__ import annotations

import json

import pytest

from settings import ConfigError, ConfigValidator, coerce_value, load_config, load_overrides, parse_key_value_lines


def test_shipped_config_is_valid():
    config = load_config()
    assert {"paperlike-1270", "toy-56", "mid-496", "census-40"} <= set(config["profiles"])
    assert config["decoder"]["alpha"] == 0.75
    assert config["decoder"]["imax"] == 15


def _minimal() -> dict:
    return {
        "profiles": {"tiny": {"q": 3, "m_b": 1, "n_b": 2}},
        "decoder": {"alpha": 0.75, "imax": 15},
        "sweep": {"ber_grid": [0.01], "min_errors": 10},
        "attack": {},
    }


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda c: c.pop("attack"), "Missing required config section"),
        (lambda c: c["profiles"]["tiny"].update(m_b=2), "m_b < n_b"),
        (lambda c: c["profiles"]["tiny"].update(q=0), "positive integer 'q'"),
        (lambda c: c["profiles"]["tiny"].update(shifts=[[0, 1, 2]]), "shift grid"),
        (lambda c: c["decoder"].update(alpha=1.2), "alpha"),
        (lambda c: c["sweep"].update(ber_grid=[0.6]), "ber_grid"),
        (lambda c: c["sweep"].update(min_errors=0), "min_errors"),
    ],
)
def test_validator_rejects(mutate, message):
    config = _minimal()
    mutate(config)
    with pytest.raises(ConfigError, match=message):
        ConfigValidator.validate(config)


def test_load_config_from_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(_minimal()))
    assert load_config(str(path))["profiles"]["tiny"]["q"] == 3


def test_coerce_value():
    assert coerce_value("3") == 3
    assert coerce_value("0.01,0.02") == [0.01, 0.02]
    assert coerce_value("[1, 2]") == [1, 2]
    assert coerce_value("seed:4") == "seed:4"
    assert coerce_value("true") is True


def test_key_value_lines():
    text = "# experiment\nber-grid = 0.01,0.02\nscheme=2  # Scheme2\n\ng=7\n"
    assert parse_key_value_lines(text) == {"ber_grid": [0.01, 0.02], "scheme": 2, "g": 7}
    with pytest.raises(ConfigError, match="Line 1"):
        parse_key_value_lines("no equals sign")


def test_load_overrides_json_and_lines(tmp_path):
    as_json = tmp_path / "run.json"
    as_json.write_text('{"min-errors": 50, "v": "seed:3"}')
    assert load_overrides(str(as_json)) == {"min_errors": 50, "v": "seed:3"}
    as_lines = tmp_path / "run.cfg"
    as_lines.write_text("imax=20\n")
    assert load_overrides(str(as_lines)) == {"imax": 20}
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_overrides(str(broken))


def test_shipped_run_defaults_sit_above_the_error_floor():
    config = load_config()
    # below these BERs the shipped profiles decode every frame within a practical trial budget
    assert min(config["sweep"]["ber_grid"]) >= 0.035
    assert config["calibrate"]["code"] == "mid-496"
    assert min(config["calibrate"]["candidates"]) >= 0.03
    assert config["calibrate"]["fer_low"] < config["calibrate"]["fer_high"]
