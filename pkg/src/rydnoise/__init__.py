"""Noisy Rydberg-atom simulation, noise-parameter regression and RL pulse correction."""

from .errors import (
    ConfigurationError,
    ConsistencyError,
    DataError,
    DivergenceError,
    IntegrationError,
    PulseError,
    RegisterError,
    RydNoiseError,
)
from .evolution import StateVector, evolve, evolve_batch
from .hamiltonian import C6_DEFAULT, build_hamiltonian, interaction_strength
from .noise import NoiseParams, NoiseRealization, apply_spam, draw_realization
from .register import AtomRegister
from .simulator import ProbabilityVector, estimate_probabilities, ideal_probabilities, probability_trace
from .waveforms import (
    ConstantWaveform,
    GaussianWaveform,
    InterpolatedWaveform,
    PulseSegment,
    PulseSequence,
    RampWaveform,
)

__version__ = "0.1.0"
