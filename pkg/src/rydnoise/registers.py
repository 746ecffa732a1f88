"""Shipped default registers and pulses.

The single-parameter family keeps the containment relations
s2 ⊂ s4a ⊂ s5, s3 ⊂ s5 and s4b = s4a, with s3 sharing one atom of s2 and
s4a sharing two atoms of s3. Coordinates sit on a grid of configurable pitch
centred on the beam axis. All layouts are defaults, not measured hardware
positions.
"""

from __future__ import annotations

import math

from .errors import RegisterError
from .register import AtomRegister
from .waveforms import PulseSequence, PulseSegment, ConstantWaveform, rabi_calibration_pulse

DEFAULT_PITCH_UM = 20.0

SCALING_SYSTEMS = ("s2", "s3", "s4a", "s5")
CONCAT_SYSTEMS = ("s4a", "s4b", "s4c", "s4d", "s4e", "s4f")
SINGLE_PARAM_SYSTEMS = ("s2", "s3", "s4a", "s5", "s4b", "s4c", "s4d", "s4e", "s4f")

# grid offsets in units of the pitch
_CORE = {
    "A": (-1.0, -0.5),
    "B": (0.0, -0.5),
    "C": (-1.0, 0.5),
    "D": (0.0, 0.5),
    "E": (1.0, -0.5),
}
_MEMBERS = {
    "s2": "AB",
    "s3": "BDE",
    "s4a": "ABCD",
    "s4b": "ABCD",
    "s5": "ABCDE",
}
# other 4-atom topologies: line, L, diamond, zigzag
_EXTRA = {
    "s4c": ((-1.5, 0.0), (-0.5, 0.0), (0.5, 0.0), (1.5, 0.0)),
    "s4d": ((-1.0, -1.0), (-1.0, 0.0), (-1.0, 1.0), (0.0, -1.0)),
    "s4e": ((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)),
    "s4f": ((-1.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (1.5, 0.5)),
}


def single_param_register(name: str, pitch: float = DEFAULT_PITCH_UM) -> AtomRegister:
    if name in _MEMBERS:
        keys = _MEMBERS[name]
        pos = tuple((pitch * _CORE[k][0], pitch * _CORE[k][1]) for k in keys)
        return AtomRegister(pos, tuple(keys))
    if name in _EXTRA:
        return AtomRegister(tuple((pitch * x, pitch * y) for x, y in _EXTRA[name]))
    raise RegisterError(f"unknown register {name!r}; known: {', '.join(SINGLE_PARAM_SYSTEMS)}")


def single_param_registers(names=SINGLE_PARAM_SYSTEMS, pitch: float = DEFAULT_PITCH_UM) -> dict[str, AtomRegister]:
    return {n: single_param_register(n, pitch) for n in names}


def multi_param_register(pitch: float = 10.0) -> AtomRegister:
    """Six atoms on a 3×2 rectangle centred on the beam."""
    pos = tuple((pitch * x, pitch * y) for y in (-0.5, 0.5) for x in (-1.0, 0.0, 1.0))
    return AtomRegister(pos)


def multi_param_pulse() -> PulseSequence:
    """Resonant 2π rad/μs drive for 500 ns, then 500 ns at half strength and δ = −π rad/μs."""
    two_pi = 2 * math.pi
    return PulseSequence(
        (
            PulseSegment(ConstantWaveform(500.0, two_pi), ConstantWaveform(500.0, 0.0)),
            PulseSegment(ConstantWaveform(500.0, two_pi / 2), ConstantWaveform(500.0, -math.pi)),
        )
    )


def single_param_pulse() -> PulseSequence:
    return rabi_calibration_pulse()


REGISTER_BUILDERS = {"s6": lambda: multi_param_register()}


def named_register(name: str, pitch: float = DEFAULT_PITCH_UM) -> AtomRegister:
    if name in REGISTER_BUILDERS:
        return REGISTER_BUILDERS[name]()
    if name == "single":
        return AtomRegister(((0.0, 0.0),))
    return single_param_register(name, pitch)
