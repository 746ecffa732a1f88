from __future__ import annotations

import math

import numpy as np

from ..errors import DataError

KL_FLOOR = 1e-12


def _values(p):
    return np.asarray(getattr(p, "values", p), dtype=float)


def kl_divergence(p, q, floor: float | None = None) -> float:
    """Σ pᵢ ln(pᵢ/qᵢ) in nats, with 0·ln 0 = 0.

    Without ``floor`` the result is ``math.inf`` when some pᵢ > 0 meets qᵢ = 0.
    With ``floor`` (monitoring mode) both vectors are clamped from below first.
    """
    p, q = _values(p), _values(q)
    if p.shape != q.shape:
        raise DataError(f"distributions differ in length: {p.shape} vs {q.shape}")
    if floor is not None:
        p, q = np.maximum(p, floor), np.maximum(q, floor)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def l1_distance(p, q) -> float:
    return float(np.sum(np.abs(_values(p) - _values(q))))
