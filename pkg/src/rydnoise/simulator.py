"""Monte-Carlo estimation of occupation probabilities from noisy shots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .evolution import DEFAULT_DT_NS, evolve_batch
from .hamiltonian import C6_DEFAULT
from .noise import NoiseParams, _seed_sequence, apply_spam, draw_realizations
from .register import AtomRegister
from .waveforms import PulseSequence

DEFAULT_SHOTS = 500
SHOT_CHUNK = 1024


def basis_labels(n_atoms: int) -> list[str]:
    return [format(i, f"0{n_atoms}b") for i in range(2**n_atoms)]


@dataclass
class ProbabilityVector:
    values: np.ndarray
    n_atoms: int
    n_shots: int | None = None

    @property
    def labels(self) -> list[str]:
        return basis_labels(self.n_atoms)

    def __len__(self) -> int:
        return len(self.values)


def chunk_rng(seed, index: int) -> np.random.Generator:
    """Independent stream for chunk ``index`` of a seeded job."""
    ss = _seed_sequence(seed)
    return np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (index,)))


def sample_bitstrings(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One Born-rule outcome per row of ``probs``; returns basis indices."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cdf[:, -1]
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def indices_to_bits(idx: np.ndarray, n_atoms: int) -> np.ndarray:
    shifts = np.arange(n_atoms - 1, -1, -1)
    return (np.asarray(idx)[:, None] >> shifts) & 1


def bits_to_indices(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1)
    return bits @ weights


def sample_shots(
    register: AtomRegister,
    pulse: PulseSequence,
    params: NoiseParams,
    n_shots: int,
    rng_seed=0,
    dt: float = DEFAULT_DT_NS,
    c6: float = C6_DEFAULT,
) -> np.ndarray:
    """Measured basis indices (after SPAM) for ``n_shots`` independent noisy shots.

    Every shot gets its own noise realization. Shots are processed in fixed
    chunks of ``SHOT_CHUNK`` with one derived stream per chunk, so the outcome
    depends only on the seed.
    """
    if n_shots < 1:
        raise ConfigurationError(f"n_shots must be >= 1, got {n_shots}")
    n = register.n_atoms
    out = []
    for c, start in enumerate(range(0, n_shots, SHOT_CHUNK)):
        size = min(SHOT_CHUNK, n_shots - start)
        rng = chunk_rng(rng_seed, c)
        mult, shifts = draw_realizations(params, register, rng, size)
        psi, _ = evolve_batch(register, pulse, mult, shifts, dt, c6=c6)
        idx = sample_bitstrings(np.abs(psi) ** 2, rng)
        bits = apply_spam(indices_to_bits(idx, n), params.eps, params.eps_prime, rng)
        out.append(bits_to_indices(bits))
    return np.concatenate(out)


def estimate_probabilities(
    register: AtomRegister,
    pulse: PulseSequence,
    params: NoiseParams,
    n_shots: int = DEFAULT_SHOTS,
    rng_seed=0,
    dt: float = DEFAULT_DT_NS,
    c6: float = C6_DEFAULT,
) -> ProbabilityVector:
    idx = sample_shots(register, pulse, params, n_shots, rng_seed, dt, c6)
    counts = np.bincount(idx, minlength=2**register.n_atoms)
    return ProbabilityVector(counts / n_shots, register.n_atoms, n_shots)


def ideal_probabilities(
    register: AtomRegister,
    pulse: PulseSequence,
    dt: float = DEFAULT_DT_NS,
    c6: float = C6_DEFAULT,
) -> ProbabilityVector:
    n = register.n_atoms
    psi, _ = evolve_batch(register, pulse, np.ones((1, n)), np.zeros((1, n)), dt, c6=c6)
    return ProbabilityVector(np.abs(psi[0]) ** 2, n, None)


def probability_trace(
    register: AtomRegister,
    pulse: PulseSequence,
    params: NoiseParams,
    n_sims: int = 10,
    n_samples: int = 25,
    rng_seed=0,
    dt: float = DEFAULT_DT_NS,
    c6: float = C6_DEFAULT,
) -> list[ProbabilityVector]:
    """|ψ(t)|² at ``n_samples`` evenly spaced times over the whole pulse, averaged over
    ``n_sims`` noise realizations. No readout error is applied."""
    if n_samples < 1 or n_sims < 1:
        raise ConfigurationError("n_samples and n_sims must be >= 1")
    n = register.n_atoms
    mult, shifts = draw_realizations(params, register, rng_seed, n_sims)
    times = np.linspace(0.0, pulse.total_duration, n_samples)
    _, samples = evolve_batch(register, pulse, mult, shifts, dt, times, c6)
    mean = (np.abs(samples) ** 2).mean(axis=0)
    return [ProbabilityVector(row, n, None) for row in mean]
