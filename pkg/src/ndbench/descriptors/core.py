from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-6


@dataclass(frozen=True)
class Descriptor:
    """A fixed-length image descriptor.

    ``values`` is stored as float32. ``normalized`` is set only by operations
    that guarantee unit Euclidean norm.
    """

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("descriptor has non-finite entries")
        if self.normalized and abs(float(np.linalg.norm(v.astype(np.float64))) - 1.0) > NORM_TOL:
            raise ValueError("descriptor flagged normalized but norm != 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.dim


@dataclass(frozen=True)
class FeatureMap:
    """Convolutional activations in H x W x C layout."""

    data: np.ndarray
    post_relu: bool = True
    height: int = field(init=False)
    width: int = field(init=False)
    channels: int = field(init=False)

    def __post_init__(self):
        d = np.ascontiguousarray(self.data, dtype=np.float32)
        if d.ndim != 3 or min(d.shape) < 1:
            raise ValueError(f"feature map must be a non-empty H x W x C array, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("feature map has non-finite entries")
        if self.post_relu and np.any(d < 0):
            raise ValueError("feature map flagged post-ReLU has negative activations")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)
        h, w, c = d.shape
        object.__setattr__(self, "height", h)
        object.__setattr__(self, "width", w)
        object.__setattr__(self, "channels", c)


def l2_normalize(v: np.ndarray) -> tuple[np.ndarray, bool]:
    """Scale ``v`` to unit norm in float64. Returns (vector, ok); ok is False for a zero vector."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0.0:
        return v.copy(), False
    return v / n, True


def as_descriptor(v: np.ndarray) -> Descriptor:
    """Normalize and wrap; the zero vector becomes an unnormalized sentinel."""
    u, ok = l2_normalize(v)
    if ok:
        # float32 rounding can move the norm by ~1e-7; renormalize in float32 to stay well inside tolerance
        u32 = u.astype(np.float32)
        u32 = u32 / np.float32(np.linalg.norm(u32.astype(np.float64)))
        return Descriptor(u32, normalized=True)
    return Descriptor(u.astype(np.float32), normalized=False)
