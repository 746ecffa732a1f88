"""Run configuration: YAML/JSON files, flag overrides and run manifests.

A config file is a mapping. Registers are given by name (``s4a``) or as a
mapping with ``positions``; pulses by preset name (``rabi``, ``multi``,
``correction-base``) or as a serialized pulse sequence with ``segments``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import yaml

from .datagen import _atomic_write
from .errors import ConfigurationError
from .register import AtomRegister
from .registers import DEFAULT_PITCH_UM, multi_param_pulse, named_register, single_param_pulse
from .waveforms import PulseSequence, gaussian_ramp_pulse

MANIFEST_NAME = "manifest.json"

PULSE_PRESETS = {
    "rabi": single_param_pulse,
    "multi": multi_param_pulse,
    "correction-base": lambda: gaussian_ramp_pulse(500.0, math.pi / 2, -20.0, 20.0),
}


def load_config(path) -> dict[str, Any]:
    if path is None:
        return {}
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config {path} is not valid YAML/JSON: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must hold a mapping at the top level")
    if set(data) == {"command", "seed", "config"}:
        # a run manifest: replay its resolved settings
        return {**{k: v for k, v in data["config"].items() if v is not None}, "seed": data["seed"]}
    return data


def merge(config: dict, overrides: dict) -> dict:
    """Flags win over file values; ``None`` means the flag was not given."""
    out = dict(config)
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def resolve_register(spec, pitch: float = DEFAULT_PITCH_UM) -> AtomRegister:
    if isinstance(spec, AtomRegister):
        return spec
    if isinstance(spec, str):
        return named_register(spec, pitch)
    if isinstance(spec, dict):
        if "positions" in spec:
            return AtomRegister.from_dict(spec)
        if "name" in spec:
            return named_register(spec["name"], spec.get("pitch", pitch))
    raise ConfigurationError(f"cannot interpret register description {spec!r}")


def resolve_pulse(spec) -> PulseSequence:
    if isinstance(spec, PulseSequence):
        return spec
    if isinstance(spec, str):
        if spec not in PULSE_PRESETS:
            raise ConfigurationError(f"unknown pulse preset {spec!r}; known: {', '.join(PULSE_PRESETS)}")
        return PULSE_PRESETS[spec]()
    if isinstance(spec, dict) and "segments" in spec:
        return PulseSequence.from_dict(spec)
    raise ConfigurationError(f"cannot interpret pulse description {spec!r}")


def _plain(value):
    if isinstance(value, (AtomRegister, PulseSequence)):
        return value.to_dict()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_manifest(out_dir, command: str, resolved: dict, seed) -> Path:
    """Echo the fully resolved run configuration next to the outputs.

    No timestamps or host details go in, so identical runs give identical
    manifests. The output directory and the config file path are left out:
    the values they led to are already resolved here, so a manifest can be
    fed back through ``--config`` to rerun into any directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in resolved.items() if k not in ("out", "config")}
    body = {"command": command, "seed": seed, "config": _plain(resolved)}
    path = out_dir / MANIFEST_NAME
    _atomic_write(path, json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}") from exc
