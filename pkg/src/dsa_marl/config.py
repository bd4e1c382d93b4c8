"""Run configuration: an embedded JSON default overridden field by field.

The default below documents every key. A user file only lists the keys it
changes; anything not present in the default is rejected, naming the key.
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .agents import Hyperparameters
from .harness import PRESETS
from .topology import ScenarioConfig

DEFAULT_CONFIG_JSON = """\
{
  "_doc": {
    "preset": "experiment preset for `run` and `trace` (see `dsa-marl run --help`)",
    "seed": "first Monte Carlo seed; runs use seed, seed+1, ...",
    "runs": "number of Monte Carlo runs per preset",
    "out": "output directory; every file the program writes lands here",
    "trace_every": "`trace` writes one row per agent every this many steps",
    "scenario": "geometry and radio parameters; amc_table is an optional CSV path",
    "hyperparameters": "learning parameters shared by every preset before its overrides"
  },
  "preset": "default",
  "seed": 0,
  "runs": 100,
  "out": "out",
  "trace_every": 1,
  "scenario": {
    "grid": 3,
    "spacing_m": 200.0,
    "coverage_radius_m": 100.0,
    "n_active_aps": 7,
    "n_crs": 2,
    "cr_link_radius_m": 50.0,
    "shadowing_std_db": 6.0,
    "bandwidth_hz": 180000.0,
    "noise_dbm": -130.0,
    "underlay_limit": 0.05,
    "pn_power_min_dbm": -30.0,
    "pn_power_max_dbm": 20.0,
    "cr_power_min_dbm": -10.0,
    "cr_power_max_dbm": 20.0,
    "cr_power_step_db": 2.5,
    "pn_readapt_every_step": false,
    "amc_table": null
  },
  "hyperparameters": {
    "n_phases": 60,
    "phase_len": 60,
    "rho": 0.15,
    "lam": 0.35,
    "c": 30,
    "lr": 0.01,
    "batch_size": 60,
    "gamma": 0.5,
    "window": 5,
    "replay_capacity": 3600,
    "hidden": [3, 5, 7],
    "relu_ceiling": 1.0
  }
}
"""


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    preset: str
    seed: int
    runs: int
    out: str
    trace_every: int
    scenario: ScenarioConfig
    hyperparameters: Hyperparameters

    def to_dict(self):
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["scenario"] = asdict(self.scenario)
        hyper = asdict(self.hyperparameters)
        hyper["hidden"] = list(hyper["hidden"])
        doc["hyperparameters"] = hyper
        return doc

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def default_dict():
    doc = json.loads(DEFAULT_CONFIG_JSON)
    doc.pop("_doc")
    return doc


def _merge(base, override, prefix=""):
    for key, value in override.items():
        name = f"{prefix}{key}"
        if key == "_doc" and not prefix:
            continue
        if key not in base:
            raise ConfigError(f"unknown config key '{name}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{name}' must be an object")
            _merge(base[key], value, name + ".")
        else:
            base[key] = _check_type(name, base[key], value)


def _check_type(name, default, value):
    if value is None or default is None:
        return value
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, list):
        ok = isinstance(value, list) and all(isinstance(v, int) for v in value)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"config key '{name}' has the wrong type: {value!r}")
    return value


def build_config(overrides=None):
    """Default merged with a (possibly nested) override dict, validated."""
    doc = default_dict()
    for layer in overrides if isinstance(overrides, list) else [overrides or {}]:
        _merge(doc, layer)
    if doc["preset"] not in PRESETS:
        raise ConfigError(f"config key 'preset' names an unknown preset: {doc['preset']!r}")
    for key in ("runs", "trace_every"):
        if doc[key] < 1:
            raise ConfigError(f"config key '{key}' must be at least 1")
    if doc["seed"] < 0:
        raise ConfigError("config key 'seed' must be non-negative")
    try:
        scenario = ScenarioConfig(**doc["scenario"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key 'scenario': {exc}") from None
    hyper = doc["hyperparameters"]
    hyper["hidden"] = tuple(hyper["hidden"])
    try:
        hyper = Hyperparameters(**hyper)
    except ValueError as exc:
        key = str(exc).split()[0]
        raise ConfigError(f"config key 'hyperparameters.{key}': {exc}") from None
    return RunConfig(doc["preset"], doc["seed"], doc["runs"], doc["out"], doc["trace_every"],
                     scenario, hyper)


def load_config(path=None, cli_overrides=None):
    """Default, then the JSON file at ``path``, then ``cli_overrides``."""
    layers = []
    if path is not None:
        try:
            layers.append(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        if not isinstance(layers[0], dict):
            raise ConfigError("config file must hold a JSON object")
    layers.append({k: v for k, v in (cli_overrides or {}).items() if v is not None})
    return build_config(copy.deepcopy(layers))
