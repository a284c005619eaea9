from __future__ import annotations

import numpy as np

from .core import Descriptor


def _vec(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, Descriptor) else x, dtype=np.float64).reshape(-1)


def triplet_loss(q, d_plus, d_minus, margin: float) -> float:
    """Ranking triplet loss 0.5 * max(0, m + |q - d+|^2 - |q - d-|^2)."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    q, dp, dm = _vec(q), _vec(d_plus), _vec(d_minus)
    if not (q.shape == dp.shape == dm.shape):
        raise ValueError(f"dimension mismatch: {q.shape}, {dp.shape}, {dm.shape}")
    pos = float(np.sum((q - dp) ** 2))
    neg = float(np.sum((q - dm) ** 2))
    return 0.5 * max(0.0, margin + pos - neg)
