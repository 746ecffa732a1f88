"""Noise parameters, per-shot realizations, and SPAM bit flips.

Channels:

* laser intensity fluctuation ``sigma_r``: one Gaussian amplitude factor
  ``max(0, 1 + η)``, η ~ N(0, sigma_r), shared by all atoms of a shot;
* laser waist ``waist`` (μm): static factor ``exp(-(r/w)²)`` for an atom at
  distance r from the beam centre (the origin);
* temperature (μK): independent Doppler detuning per atom with standard
  deviation ``k_eff * sqrt(k_B T / m_Rb87)``;
* ``eps`` / ``eps_prime``: false positive / false negative readout.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError
from .register import AtomRegister

BOLTZMANN = 1.380649e-23  # J/K
RB87_MASS = 1.443160648e-25  # kg
K_EFF = 8.7  # rad/μm, effective wavevector of the two-photon Rydberg excitation

LABEL_NAMES = ("sigma_r", "waist", "temperature", "eps", "eps_prime")


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (list, tuple)):
        return np.random.SeedSequence([int(s) for s in seed])
    return np.random.SeedSequence(int(seed))


def make_rng(seed) -> np.random.Generator:
    """Generator from an int, a tuple of ints, a SeedSequence, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(_seed_sequence(seed))


@dataclass(frozen=True)
class NoiseParams:
    sigma_r: float = 0.0
    waist: float = math.inf
    temperature: float = 0.0
    eps: float = 0.0
    eps_prime: float = 0.0

    def __post_init__(self):
        for name in LABEL_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.sigma_r >= 0:
            raise ConfigurationError(f"sigma_r must be >= 0, got {self.sigma_r}")
        if not self.waist > 0:
            raise ConfigurationError(f"waist must be > 0, got {self.waist}")
        if not self.temperature >= 0:
            raise ConfigurationError(f"temperature must be >= 0, got {self.temperature}")
        for name in ("eps", "eps_prime"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def noiseless(cls) -> "NoiseParams":
        return cls()

    @classmethod
    def device_estimate(cls) -> "NoiseParams":
        """Vendor-estimated device values: 3 %, 68 μm, 30 μK, 3 %, 8 %."""
        return cls(sigma_r=0.03, waist=68.0, temperature=30.0, eps=0.03, eps_prime=0.08)

    @property
    def doppler_sigma(self) -> float:
        return doppler_sigma(self.temperature)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in LABEL_NAMES])

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["waist"]):
            d["waist"] = None
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseParams":
        unknown = set(data) - set(LABEL_NAMES)
        if unknown:
            raise ConfigurationError(f"unknown noise parameters {sorted(unknown)}")
        d = dict(data)
        if d.get("waist") is None:
            d.pop("waist", None)
        return cls(**d)


def doppler_sigma(temperature_uk: float) -> float:
    """Std of the Doppler detuning in rad/μs at ``temperature_uk`` μK."""
    v_rms = math.sqrt(BOLTZMANN * temperature_uk * 1e-6 / RB87_MASS)  # m/s == μm/μs
    return K_EFF * v_rms


@dataclass
class NoiseRealization:
    omega_multiplier: np.ndarray
    doppler_shift: np.ndarray

    @classmethod
    def ideal(cls, n_atoms: int) -> "NoiseRealization":
        return cls(np.ones(n_atoms), np.zeros(n_atoms))


def beam_profile(register: AtomRegister, waist: float) -> np.ndarray:
    r = register.radii()
    return np.exp(-((r / waist) ** 2))


def draw_realizations(
    params: NoiseParams, register: AtomRegister, rng, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` shots at once. Returns (multipliers, shifts), each (size, n_atoms)."""
    rng = make_rng(rng)
    n = register.n_atoms
    eta = rng.normal(0.0, params.sigma_r, size=size)
    intensity = np.maximum(0.0, 1.0 + eta)
    mult = intensity[:, None] * beam_profile(register, params.waist)[None, :]
    shifts = rng.normal(0.0, params.doppler_sigma, size=(size, n))
    return mult, shifts


def draw_realization(params: NoiseParams, register: AtomRegister, rng_seed) -> NoiseRealization:
    mult, shifts = draw_realizations(params, register, rng_seed, 1)
    return NoiseRealization(mult[0], shifts[0])


def apply_spam(bits, eps: float, eps_prime: float, rng) -> np.ndarray:
    """Flip 0→1 with probability ``eps`` and 1→0 with ``eps_prime``, independently per bit.

    ``bits`` may be any integer array of 0/1 values; the shape is preserved.
    """
    rng = make_rng(rng)
    bits = np.asarray(bits)
    u = rng.random(bits.shape)
    flip = np.where(bits == 1, u < eps_prime, u < eps)
    return np.where(flip, 1 - bits, bits)


def readout_distribution(probs, eps: float, eps_prime: float) -> np.ndarray:
    """Expected distribution of measured bitstrings given true-state probabilities.

    Applies the single-atom readout confusion matrix [[1-ε, ε′], [ε, 1-ε′]]
    (columns: true bit, rows: read bit) to every atom; the exact counterpart
    of ``apply_spam`` in the infinite-shot limit.
    """
    p = np.asarray(probs, dtype=float)
    n = p.size.bit_length() - 1
    if p.ndim != 1 or p.size != 2**n:
        raise ValueError("probability vector length must be a power of two")
    conf = np.array([[1.0 - eps, eps_prime], [eps, 1.0 - eps_prime]])
    t = p.reshape((2,) * n)
    for axis in range(n):
        t = np.moveaxis(np.tensordot(conf, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)
