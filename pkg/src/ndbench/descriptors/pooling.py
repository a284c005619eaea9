"""Aggregation of convolutional feature maps into global descriptors (SPoC, R-MAC)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Descriptor, FeatureMap, as_descriptor
from .pca import PcaModel, whiten_raw

# candidate region counts along the long side of the map
_LONG_SIDE_STEPS = (2, 3, 4, 5, 6, 7)


@dataclass(frozen=True)
class RmacConfig:
    max_scale: int = 2
    overlap_target: float = 0.4

    def __post_init__(self):
        if self.max_scale < 1:
            raise ValueError("max_scale must be >= 1")
        if not 0.0 <= self.overlap_target < 1.0:
            raise ValueError("overlap_target must lie in [0, 1)")


@dataclass(frozen=True)
class Region:
    top: int
    left: int
    side: int


def spoc_aggregate(fmap: FeatureMap) -> Descriptor:
    """Channelwise sum over all spatial positions. Not whitened or normalized."""
    s = fmap.data.astype(np.float64).sum(axis=(0, 1))
    return Descriptor(s.astype(np.float32), normalized=False)


def rmac_regions(height: int, width: int, cfg: RmacConfig = RmacConfig()) -> list[Region]:
    """Square regions on a uniform grid at scales 1..L.

    At scale l the side is floor(2*min(H,W)/(l+1)). The long side of the map gets
    extra regions, chosen so that neighbouring regions overlap as close to
    ``overlap_target`` as possible.
    """
    if height < 1 or width < 1:
        raise ValueError("map must be at least 1x1")
    short = min(height, width)
    long_extra = 0
    if height != width:
        steps = np.asarray(_LONG_SIDE_STEPS, dtype=np.float64)
        b = (max(height, width) - short) / (steps - 1)
        overlap = (short**2 - short * b) / short**2
        long_extra = int(np.argmin(np.abs(overlap - cfg.overlap_target))) + 1
    extra_w = long_extra if height < width else 0
    extra_h = long_extra if height > width else 0

    regions: list[Region] = []
    for level in range(1, cfg.max_scale + 1):
        side = math.floor(2 * short / (level + 1))
        if side < 1:
            raise ValueError(
                f"scale {level} gives regions smaller than one cell on a {height}x{width} map"
            )
        half = math.floor(side / 2 - 1)
        tops = _grid_starts(height, side, level + extra_h, half)
        lefts = _grid_starts(width, side, level + extra_w, half)
        for top in tops:
            for left in lefts:
                regions.append(Region(top, left, side))
    return regions


def _grid_starts(extent: int, side: int, count: int, half: int) -> list[int]:
    step = 0.0 if count == 1 else (extent - side) / (count - 1)
    return [int(math.floor(half + i * step)) - half for i in range(count)]


def regional_max(fmap: FeatureMap, regions: list[Region]) -> np.ndarray:
    """Max-pool each region channelwise. Returns an (n_regions, C) float64 array."""
    out = np.empty((len(regions), fmap.channels), dtype=np.float64)
    for i, r in enumerate(regions):
        block = fmap.data[r.top : r.top + r.side, r.left : r.left + r.side, :]
        out[i] = block.max(axis=(0, 1))
    return out


def rmac_aggregate(fmap: FeatureMap, cfg: RmacConfig, pca: PcaModel) -> Descriptor:
    if pca.dim != fmap.channels:
        raise ValueError(f"PCA trained on dim {pca.dim}, feature map has {fmap.channels} channels")
    regions = rmac_regions(fmap.height, fmap.width, cfg)
    total = np.zeros(fmap.channels, dtype=np.float64)
    for v in regional_max(fmap, regions):
        w = whiten_raw(v, pca)
        n = np.linalg.norm(w)
        if n > 0:
            total += w / n
    return as_descriptor(total)
