"""Entropies of probability spectra, in bits."""

from __future__ import annotations

import numpy as np

SPECTRUM_FLOOR = 1e-300


def _clean(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    return p[p > SPECTRUM_FLOOR]


def von_neumann(p) -> float:
    """``-sum p log2 p`` over the positive part of ``p``."""
    p = _clean(p)
    return float(-np.sum(p * np.log2(p))) + 0.0


def renyi(p, alpha: float) -> float:
    """Renyi entropy ``log2(sum p**alpha) / (1 - alpha)``.

    ``alpha = 0`` gives ``log2`` of the rank, ``alpha = 1`` the von Neumann
    entropy and ``alpha = inf`` the min-entropy ``-log2 max(p)``.
    """
    p = _clean(p)
    if alpha < 0:
        raise ValueError("Renyi index must be non-negative")
    if p.size == 0:
        return 0.0
    if alpha == 0:
        return float(np.log2(p.size))
    if np.isinf(alpha):
        return float(-np.log2(p.max())) + 0.0
    if abs(alpha - 1.0) < 1e-12:
        return von_neumann(p)
    return float(np.log2(np.sum(p**alpha)) / (1.0 - alpha)) + 0.0
