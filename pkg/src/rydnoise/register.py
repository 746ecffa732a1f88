"""Atom registers: 2D tweezer layouts in micrometres."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import RegisterError

MIN_DISTANCE_UM = 4.0
MAX_RADIUS_UM = 50.0
MAX_ATOMS = 100
MAX_SIMULATED_ATOMS = 8

_TOL = 1e-9


@dataclass(frozen=True)
class AtomRegister:
    """Atom coordinates in μm. Atom ``i`` maps to bit ``n - 1 - i`` of a basis index."""

    positions: tuple[tuple[float, float], ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        pos = tuple((float(x), float(y)) for x, y in self.positions)
        object.__setattr__(self, "positions", pos)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        self.validate()

    def validate(self) -> None:
        n = len(self.positions)
        if not 1 <= n <= MAX_ATOMS:
            raise RegisterError(f"register must hold 1..{MAX_ATOMS} atoms, got {n}")
        if self.names is not None and len(self.names) != n:
            raise RegisterError("names and positions differ in length")
        for i, (x, y) in enumerate(self.positions):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise RegisterError(f"atom {i} has a non-finite coordinate")
            if math.hypot(x, y) > MAX_RADIUS_UM + _TOL:
                raise RegisterError(f"atom {i} lies outside the {MAX_RADIUS_UM} um radius")
        for i, j in itertools.combinations(range(n), 2):
            d = math.dist(self.positions[i], self.positions[j])
            if d < MIN_DISTANCE_UM - _TOL:
                raise RegisterError(
                    f"atoms {i} and {j} are {d:.3f} um apart (minimum {MIN_DISTANCE_UM})"
                )

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    @property
    def coords(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float).reshape(-1, 2)

    def distances(self) -> np.ndarray:
        c = self.coords
        return np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1)

    def radii(self) -> np.ndarray:
        """Distance of each atom from the origin (the beam centre)."""
        return np.linalg.norm(self.coords, axis=1)

    def permuted(self, order: Sequence[int]) -> "AtomRegister":
        names = None if self.names is None else tuple(self.names[i] for i in order)
        return AtomRegister(tuple(self.positions[i] for i in order), names)

    def contains(self, other: "AtomRegister", tol: float = 1e-9) -> bool:
        """True if every atom of ``other`` sits on an atom of this register."""
        return all(
            any(math.dist(p, q) <= tol for q in self.positions) for p in other.positions
        )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"positions": [list(p) for p in self.positions]}
        if self.names is not None:
            d["names"] = list(self.names)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AtomRegister":
        if "positions" not in data:
            raise RegisterError("register definition needs 'positions'")
        names = data.get("names")
        return cls(tuple(tuple(p) for p in data["positions"]), tuple(names) if names else None)


def require_simulable(register: AtomRegister) -> None:
    if register.n_atoms > MAX_SIMULATED_ATOMS:
        raise RegisterError(
            f"state-vector simulation supports at most {MAX_SIMULATED_ATOMS} atoms, "
            f"got {register.n_atoms}"
        )
