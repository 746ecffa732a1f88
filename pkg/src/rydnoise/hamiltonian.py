"""Rydberg Hamiltonian with per-atom drive and detuning.

    H = sum_i (Ω_i/2) σˣ_i − sum_i (δ_i/2) σᶻ_i + sum_{i<j} U_ij n_i n_j

with ħ = 1 and energies in rad/μs. σᶻ_i is +1 on the Rydberg state (bit 1), so a
positive detuning lowers the energy of excited atoms.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, RegisterError
from .register import MIN_DISTANCE_UM, AtomRegister

# Rb 70S_{1/2} van der Waals coefficient, rad·μm⁶/μs.
C6_DEFAULT = 5_420_158.53


def interaction_strength(r: float, c6: float = C6_DEFAULT) -> float:
    """Van der Waals interaction C6/r⁶ in rad/μs for a separation ``r`` in μm."""
    if r < MIN_DISTANCE_UM - 1e-9:
        raise RegisterError(f"separation {r} um is below the {MIN_DISTANCE_UM} um minimum")
    return c6 / r**6


def bit_table(n_atoms: int) -> np.ndarray:
    """(2ⁿ, n) array of occupation numbers; atom 0 is the most significant bit."""
    idx = np.arange(2**n_atoms)
    shifts = np.arange(n_atoms - 1, -1, -1)
    return (idx[:, None] >> shifts) & 1


def interaction_matrix(register: AtomRegister, c6: float = C6_DEFAULT) -> np.ndarray:
    d = register.distances()
    n = register.n_atoms
    u = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    if len(iu[0]):
        u[iu] = [interaction_strength(r, c6) for r in d[iu]]
    return u + u.T


def interaction_energies(register: AtomRegister, c6: float = C6_DEFAULT) -> np.ndarray:
    """Diagonal of sum_{i<j} U_ij n_i n_j in the computational basis."""
    bits = bit_table(register.n_atoms).astype(float)
    u = interaction_matrix(register, c6)
    return 0.5 * np.einsum("bi,ij,bj->b", bits, u, bits)


def build_hamiltonian(
    register: AtomRegister,
    omega_per_atom,
    delta_per_atom,
    c6: float = C6_DEFAULT,
) -> np.ndarray:
    n = register.n_atoms
    omega = np.asarray(omega_per_atom, dtype=float)
    delta = np.asarray(delta_per_atom, dtype=float)
    if omega.shape != (n,) or delta.shape != (n,):
        raise ConfigurationError(
            f"expected {n} per-atom drive values, got {omega.shape} and {delta.shape}"
        )
    dim = 2**n
    bits = bit_table(n)
    z = 2.0 * bits - 1.0
    h = np.zeros((dim, dim), dtype=complex)
    diag = -0.5 * z @ delta + interaction_energies(register, c6)
    h[np.arange(dim), np.arange(dim)] = diag
    idx = np.arange(dim)
    for i in range(n):
        flipped = idx ^ (1 << (n - 1 - i))
        h[idx, flipped] += 0.5 * omega[i]
    return h
