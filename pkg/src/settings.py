# settings.py
# Shared Configuration Loader
# config.json lives next to this file and carries the code profiles plus the
# default decoder, sweep, attack and syndrome-bit settings. Experiment files passed with
# --config are either JSON or plain `key=value` lines.

import json
import logging
import os
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

CONFIG_PATH = os.path.join(os.path.dirname(__file__), "config.json")
REQUIRED_SECTIONS = ["profiles", "decoder", "sweep", "attack"]


class ConfigError(ValueError):
    """Invalid configuration content."""


# --- VALIDATORS ---
class ConfigValidator:
    """Validates config.json for consistency and completeness."""

    @staticmethod
    def validate(config: Dict[str, Any]):
        for section in REQUIRED_SECTIONS:
            if section not in config:
                raise ConfigError(f"Missing required config section: {section}")

        for name, prof in config["profiles"].items():
            for field_name in ("q", "m_b", "n_b"):
                value = prof.get(field_name)
                if not isinstance(value, int) or value < 1:
                    raise ConfigError(f"Profile '{name}' needs a positive integer '{field_name}', got {value!r}")
            if prof["m_b"] >= prof["n_b"]:
                raise ConfigError(f"Profile '{name}' must have m_b < n_b, got {prof['m_b']}x{prof['n_b']}")
            shifts = prof.get("shifts")
            if shifts is not None:
                if len(shifts) != prof["m_b"] or any(len(row) != prof["n_b"] for row in shifts):
                    raise ConfigError(f"Profile '{name}' shift grid does not match {prof['m_b']}x{prof['n_b']}")

        decoder = config["decoder"]
        if not 0 < decoder.get("alpha", 0.75) < 1:
            raise ConfigError(f"decoder.alpha must lie in (0, 1), got {decoder.get('alpha')}")
        if decoder.get("imax", 15) < 1:
            raise ConfigError(f"decoder.imax must be at least 1, got {decoder.get('imax')}")

        sweep = config["sweep"]
        for ber in sweep.get("ber_grid", []):
            if not 0 < ber <= 0.5:
                raise ConfigError(f"sweep.ber_grid values must lie in (0, 0.5], got {ber}")
        if sweep.get("min_errors", 10) < 1:
            raise ConfigError(f"sweep.min_errors must be at least 1, got {sweep.get('min_errors')}")

        logger.debug("Configuration validation successful.")


# --- CONFIG LOADING ---
def load_config(file_path: Optional[str] = None) -> Dict[str, Any]:
    """Loads and validates config.json (or the given file)."""
    path = file_path or CONFIG_PATH
    with open(path, "r", encoding="utf-8") as f:
        config = json.load(f)
    ConfigValidator.validate(config)
    return config


def coerce_value(raw: str) -> Any:
    """JSON scalars and lists where they parse, bare strings otherwise."""
    text = raw.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        if "," in text:
            return [coerce_value(part) for part in text.split(",") if part.strip()]
        return text


def parse_key_value_lines(text: str) -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"Line {lineno}: expected key=value, got '{line}'")
        key, raw = line.split("=", 1)
        values[key.strip().replace("-", "_")] = coerce_value(raw)
    return values


def load_overrides(path: str) -> Dict[str, Any]:
    """Reads an experiment file: JSON object or key=value lines."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        return {str(k).replace("-", "_"): v for k, v in data.items()}
    return parse_key_value_lines(text)
