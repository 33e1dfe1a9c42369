"""Strict JSON configuration for scenario runs.

The schema mirrors the config dataclasses one-to-one: top-level scalars plus
one JSON object per settings section, every key named exactly like the
corresponding dataclass field.  Unknown keys are rejected with a
closest-match suggestion; invariant violations surface as
:class:`ConfigError` naming the offending field path.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping

from .crossval import MonitorConfig
from .forward import HeatingModel, NvCalibration, SivCalibration
from .noise import DriftState
from .scenarios import (
    BfieldSettings,
    LaserParams,
    OdmrSettings,
    PlSettings,
    PrecisionParams,
    RampParams,
    ScenarioConfig,
    ScenarioKind,
)


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending key."""


_SECTIONS: dict[str, type] = {
    "odmr": OdmrSettings,
    "pl": PlSettings,
    "nv_cal": NvCalibration,
    "siv_cal": SivCalibration,
    "heating_nv": HeatingModel,
    "heating_siv": HeatingModel,
    "drift": DriftState,
    "bfield": BfieldSettings,
    "detection": MonitorConfig,
    "ramp": RampParams,
    "precision": PrecisionParams,
    "laser": LaserParams,
}

_TOP_SCALARS = ("kind", "seed", "duration_s", "sample_period_s", "noiseless")


def _suggest(key: str, known: list[str]) -> str:
    matches = difflib.get_close_matches(key, known, n=1)
    return f"; did you mean {matches[0]!r}?" if matches else ""


def _coerce(path: str, value: Any, annotation: str) -> Any:
    if annotation == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if annotation == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if annotation.startswith("tuple[float"):
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{path}: expected a list of numbers, got {value!r}")
        return tuple(float(v) for v in value)
    if annotation.startswith("tuple[str"):
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{path}: expected a list of strings, got {value!r}")
        return tuple(value)
    raise ConfigError(f"{path}: unsupported value {value!r}")


def _build_section(name: str, cls: type, data: Any) -> Any:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{name}: expected an object")
    known = [f.name for f in fields(cls)]
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key}{_suggest(key, known)}")
        annotation = next(f.type for f in fields(cls) if f.name == key)
        kwargs[key] = _coerce(f"{name}.{key}", value, annotation)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def scenario_config_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    """Validate a parsed JSON object into a :class:`ScenarioConfig`."""
    if not isinstance(data, Mapping):
        raise ConfigError("top level: expected an object")
    known = list(_TOP_SCALARS) + list(_SECTIONS)
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {key}{_suggest(key, known)}")
        if key in _SECTIONS:
            kwargs[key] = _build_section(key, _SECTIONS[key], value)
        elif key == "kind":
            if not isinstance(value, str):
                raise ConfigError(f"kind: expected a string, got {value!r}")
            try:
                kwargs[key] = ScenarioKind(value)
            except ValueError:
                valid = [k.value for k in ScenarioKind]
                raise ConfigError(f"kind: {value!r} is not one of {valid}{_suggest(value, valid)}") from None
        elif key == "seed":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"seed: expected an integer, got {value!r}")
            kwargs[key] = value
        elif key == "noiseless":
            kwargs[key] = _coerce("noiseless", value, "bool")
        else:
            kwargs[key] = _coerce(key, value, "float")
    try:
        return ScenarioConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return scenario_config_from_dict(data)


def default_config_dict(kind: str = "ramp") -> dict[str, Any]:
    """Fully populated configuration echoing the documented defaults."""
    config = ScenarioConfig(kind=ScenarioKind(kind))
    out: dict[str, Any] = {
        "kind": config.kind.value,
        "seed": config.seed,
        "duration_s": config.duration_s,
        "sample_period_s": config.sample_period_s,
        "noiseless": config.noiseless,
    }
    for name, cls in _SECTIONS.items():
        section = getattr(config, name)
        entry: dict[str, Any] = {}
        for f in fields(cls):
            value = getattr(section, f.name)
            entry[f.name] = list(value) if isinstance(value, tuple) else value
        out[name] = entry
    return out
