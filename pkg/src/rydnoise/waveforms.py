"""Waveforms and pulse sequences.

Durations are in ns, waveform values in rad/μs. Pulse areas are in rad, i.e. the
integral of a Rabi waveform with time measured in μs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import PulseError

NS_PER_US = 1000.0


class Waveform:
    kind = "base"
    duration: float

    def sample(self, t) -> np.ndarray:
        """Value at time(s) ``t`` in ns, measured from the start of the waveform."""
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False

    def min_value(self) -> float:
        raise NotImplementedError

    def max_abs(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def _check_duration(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise PulseError(f"waveform duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class ConstantWaveform(Waveform):
    duration: float
    value: float
    kind = "constant"

    def __post_init__(self):
        self._check_duration()

    @property
    def is_constant(self) -> bool:
        return True

    def sample(self, t) -> np.ndarray:
        return np.full(np.shape(t), self.value, dtype=float)

    def min_value(self) -> float:
        return self.value

    def max_abs(self) -> float:
        return abs(self.value)

    def to_dict(self):
        return {"kind": self.kind, "duration": self.duration, "value": self.value}


@dataclass(frozen=True)
class RampWaveform(Waveform):
    """Linear ramp from ``start`` to ``stop``."""

    duration: float
    start: float
    stop: float
    kind = "ramp"

    def __post_init__(self):
        self._check_duration()

    @property
    def is_constant(self) -> bool:
        return self.start == self.stop

    def sample(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.start + (self.stop - self.start) * (t / self.duration)

    def min_value(self) -> float:
        return min(self.start, self.stop)

    def max_abs(self) -> float:
        return max(abs(self.start), abs(self.stop))

    def to_dict(self):
        return {"kind": self.kind, "duration": self.duration, "start": self.start, "stop": self.stop}


@dataclass(frozen=True)
class GaussianWaveform(Waveform):
    """Gaussian centred at T/2 with standard deviation T/6, truncated to [0, T].

    The peak is scaled so that the integral over [0, T] equals ``area`` exactly.
    """

    duration: float
    area: float
    kind = "gaussian"

    def __post_init__(self):
        self._check_duration()

    @property
    def is_constant(self) -> bool:
        return self.area == 0

    @property
    def sigma(self) -> float:
        return self.duration / 6.0

    @property
    def amplitude(self) -> float:
        sigma_us = self.sigma / NS_PER_US
        truncated_mass = math.erf(3.0 / math.sqrt(2.0))
        return self.area / (sigma_us * math.sqrt(2.0 * math.pi) * truncated_mass)

    def sample(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.area == 0:
            return np.zeros(t.shape)
        z = (t - 0.5 * self.duration) / self.sigma
        return self.amplitude * np.exp(-0.5 * z * z)

    def min_value(self) -> float:
        return min(0.0, self.amplitude)

    def max_abs(self) -> float:
        return abs(self.amplitude)

    def to_dict(self):
        return {"kind": self.kind, "duration": self.duration, "area": self.area}


@dataclass(frozen=True)
class InterpolatedWaveform(Waveform):
    """Equally spaced samples over [0, T], linearly interpolated."""

    duration: float
    values: tuple[float, ...]
    kind = "piecewise"

    def __post_init__(self):
        self._check_duration()
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < 2:
            raise PulseError("interpolated waveform needs at least two samples")

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    def sample(self, t) -> np.ndarray:
        grid = np.linspace(0.0, self.duration, len(self.values))
        return np.interp(np.asarray(t, dtype=float), grid, self.values)

    def min_value(self) -> float:
        return min(self.values)

    def max_abs(self) -> float:
        return max(abs(v) for v in self.values)

    def to_dict(self):
        return {"kind": self.kind, "duration": self.duration, "values": list(self.values)}


_KINDS = {
    "constant": (ConstantWaveform, ("value",)),
    "ramp": (RampWaveform, ("start", "stop")),
    "gaussian": (GaussianWaveform, ("area",)),
    "piecewise": (InterpolatedWaveform, ("values",)),
}


def waveform_from_dict(data: dict[str, Any], duration: float | None = None) -> Waveform:
    kind = data.get("kind")
    if kind not in _KINDS:
        raise PulseError(f"unknown waveform kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls, fields = _KINDS[kind]
    dur = data.get("duration", duration)
    if dur is None:
        raise PulseError("waveform duration missing")
    missing = [f for f in fields if f not in data]
    if missing:
        raise PulseError(f"{kind} waveform missing {missing}")
    return cls(float(dur), *(data[f] if f == "values" else float(data[f]) for f in fields))


@dataclass(frozen=True)
class PulseSegment:
    rabi: Waveform
    detuning: Waveform

    def __post_init__(self):
        if not math.isclose(self.rabi.duration, self.detuning.duration, rel_tol=0, abs_tol=1e-9):
            raise PulseError(
                f"rabi ({self.rabi.duration} ns) and detuning ({self.detuning.duration} ns) "
                "durations differ"
            )
        if self.rabi.min_value() < 0:
            raise PulseError("Rabi frequency must be non-negative")

    @property
    def duration(self) -> float:
        return self.rabi.duration

    @property
    def is_constant(self) -> bool:
        return self.rabi.is_constant and self.detuning.is_constant


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple[PulseSegment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @classmethod
    def single(cls, rabi: Waveform, detuning: Waveform) -> "PulseSequence":
        return cls((PulseSegment(rabi, detuning),))

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.segments + other.segments)

    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def rabi(self, t) -> np.ndarray:
        return self._sample(t, "rabi")

    def detuning(self, t) -> np.ndarray:
        return self._sample(t, "detuning")

    def _sample(self, t, which: str) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        edges = self.boundaries()
        for k, seg in enumerate(self.segments):
            last = k == len(self.segments) - 1
            mask = (t >= edges[k]) & ((t <= edges[k + 1]) if last else (t < edges[k + 1]))
            if mask.any():
                out[mask] = getattr(seg, which).sample(t[mask] - edges[k])
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "segments": [
                {"duration": s.duration, "rabi": s.rabi.to_dict(), "detuning": s.detuning.to_dict()}
                for s in self.segments
            ]
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PulseSequence":
        segs = []
        for raw in data.get("segments", []):
            dur = raw.get("duration")
            segs.append(
                PulseSegment(
                    waveform_from_dict(raw["rabi"], dur),
                    waveform_from_dict(raw["detuning"], dur),
                )
            )
        return cls(tuple(segs))


def constant_pulse(duration: float, rabi: float, detuning: float = 0.0) -> PulseSequence:
    return PulseSequence.single(ConstantWaveform(duration, rabi), ConstantWaveform(duration, detuning))


def gaussian_ramp_pulse(duration: float, area: float, delta_start: float, delta_stop: float) -> PulseSequence:
    return PulseSequence.single(
        GaussianWaveform(duration, area), RampWaveform(duration, delta_start, delta_stop)
    )


def rabi_calibration_pulse() -> PulseSequence:
    """Constant 2π rad/μs drive for 660 ns at zero detuning (single-parameter studies)."""
    return constant_pulse(660.0, 2 * math.pi, 0.0)

