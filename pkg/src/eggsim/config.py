"""Experiment configuration: nested frozen dataclasses loadable from JSON.

Every section is optional in the JSON document; missing values take the
defaults below, which reproduce the 29SiO+ parameters (V_m = 10 V,
r_o = 0.5 mm, w_1 = 2 pi x 1 MHz).  Frequencies may be written as numbers
in rad/s or as strings with an ordinary-frequency unit, e.g. ``"1 MHz"``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .constants import TWO_PI, to_angular
from .errors import ConfigError
from .model import GateConfig, MoleculeConfig, TrapConfig, _require

FREQUENCY_FIELDS = {
    ("molecule", "splitting"),
    ("trap", "secular_frequency"),
    ("gate", "detuning"),
}


@dataclass(frozen=True)
class DriveConfig:
    voltage: float = 10.0

    def __post_init__(self):
        _require(self.voltage >= 0, "drive.voltage (V_m) must be >= 0")


@dataclass(frozen=True)
class HeatingConfig:
    t_end: float = 100e-6
    n_samples: int = 101
    participation: float = 1.0
    mismatch: float = 0.0
    temperature: float = 0.5e-3
    thermal_eps: float = 1e-4
    n_max: int | None = None

    def __post_init__(self):
        _require(self.t_end >= 0, "heating.t_end must be >= 0")
        _require(self.n_samples >= 1, "heating.n_samples must be >= 1")
        _require(0 < abs(self.participation) <= 1, "heating.participation must be in (0, 1]")
        _require(0 <= self.mismatch < 2, "heating.mismatch must be in [0, 2)")


@dataclass(frozen=True)
class MsConfig:
    t_end: float | None = None  # default: angle pi/2 (one full Bell period)
    n_samples: int = 201
    initial_fock: int | None = None
    thermal_eps: float = 1e-4
    n_max: int | None = None
    stark_compensation: bool = True


@dataclass(frozen=True)
class SpamConfig:
    drive_time: float = 1e-3
    threshold: float | None = None  # in units of hbar w_q
    participation: float = 1.0
    temperature: float = 0.5e-3
    thermal_eps: float = 1e-4


@dataclass(frozen=True)
class UltrafastConfig:
    n_pulses: int = 4
    t_pulse: float = 1e-8
    target_phase: float = math.pi / 4
    max_total_time: float = 10e-6
    max_kick: float | None = None
    n_max: int = 20
    samples_per_period: int = 64

    def __post_init__(self):
        _require(self.n_pulses >= 4, "ultrafast.n_pulses must be >= 4")
        _require(self.t_pulse > 0, "ultrafast.t_pulse must be > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    molecule: MoleculeConfig = field(default_factory=MoleculeConfig)
    trap: TrapConfig = field(default_factory=TrapConfig)
    drive: DriveConfig = field(default_factory=DriveConfig)
    gate: GateConfig = field(default_factory=GateConfig)
    heating: HeatingConfig = field(default_factory=HeatingConfig)
    ms: MsConfig = field(default_factory=MsConfig)
    spam: SpamConfig = field(default_factory=SpamConfig)
    ultrafast: UltrafastConfig = field(default_factory=UltrafastConfig)

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **sections):
        return dataclasses.replace(self, **sections)


def _coerce(section, key, value, target_type):
    if (section, key) in FREQUENCY_FIELDS:
        return to_angular(value)
    if value is None:
        return None
    if target_type in ("int", "int | None") and not isinstance(value, bool):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{section}.{key} must be an integer")
        return int(value)
    if target_type in ("float", "float | None"):
        return float(value)
    if target_type == "bool" and not isinstance(value, bool):
        if str(value).lower() in ("true", "1"):
            return True
        if str(value).lower() in ("false", "0"):
            return False
        raise ConfigError(f"{section}.{key} must be a boolean")
    return value


def from_dict(doc):
    """Build an :class:`ExperimentConfig`; unknown keys are a :class:`ConfigError`."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    sections = {}
    known = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    for name, values in doc.items():
        if name not in known:
            raise ConfigError(f"unknown config section {name!r}")
        cls = known[name].default_factory
        fields_ = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in (values or {}).items():
            if key not in fields_:
                raise ConfigError(f"unknown key {name}.{key}")
            try:
                kwargs[key] = _coerce(name, key, value, fields_[key].type)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{name}.{key}: {exc}") from exc
        try:
            sections[name] = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
    return ExperimentConfig(**sections)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_dict(doc)


def apply_overrides(cfg, overrides):
    """Apply ``section.key=value`` strings; values are parsed as JSON when possible."""
    doc = cfg.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        if len(parts) != 2 or parts[0] not in doc or parts[1] not in doc[parts[0]]:
            raise ConfigError(f"unknown override key {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        doc[parts[0]][parts[1]] = value
    return from_dict(doc)


def paper_config():
    """Default parameters (29SiO+, V_m = 10 V, r_o = 0.5 mm, w_1 = 2 pi x 1 MHz)."""
    return ExperimentConfig()


def dump(cfg):
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2)


__all__ = ["ExperimentConfig", "DriveConfig", "HeatingConfig", "MsConfig", "SpamConfig",
           "UltrafastConfig", "from_dict", "load", "apply_overrides", "paper_config", "dump",
           "TWO_PI"]
