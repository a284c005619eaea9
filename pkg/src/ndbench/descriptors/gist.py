"""GIST scene descriptor: block-pooled Gabor energies computed in the frequency domain.

Structure follows the Oliva-Torralba reference code: intensity rescale, log
prefilter with local contrast normalization, symmetric boundary extension, a
bank of log-polar Gabor transfer functions, and block averaging of the
response magnitude.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import Descriptor

POOLING_MODES = ("mean", "energy")


@dataclass(frozen=True)
class GistConfig:
    image_side: int = 512
    scales: int = 4
    orientations_per_scale: int = 8
    blocks: int = 4
    boundary_extension: int = 32
    prefilter_fc: float = 4.0
    prefilter: bool = True
    # "mean" = mean response magnitude per block, "energy" = mean squared magnitude
    pooling: str = "mean"

    def __post_init__(self):
        if min(self.image_side, self.scales, self.orientations_per_scale, self.blocks) < 1:
            raise ValueError("GIST sizes must be positive")
        if self.blocks > self.image_side:
            raise ValueError("more blocks than pixels per side")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}")
        if self.boundary_extension < 0:
            raise ValueError("boundary_extension must be >= 0")

    @property
    def n_filters(self) -> int:
        return self.scales * self.orientations_per_scale

    @property
    def dim(self) -> int:
        return self.blocks**2 * self.n_filters


@lru_cache(maxsize=8)
def gabor_bank(side: int, scales: int, orientations: int) -> np.ndarray:
    """Transfer functions of shape (scales*orientations, side, side), unshifted FFT layout.

    Scale i is centred on radial frequency 0.3 / 1.85**i cycles/pixel; orientation
    j is rotated by pi*j/orientations. Every filter is forced to zero at DC.
    """
    half = side / 2
    fx, fy = np.meshgrid(np.arange(-half, half), np.arange(-half, half))
    fr = np.fft.fftshift(np.sqrt(fx**2 + fy**2))
    theta = np.fft.fftshift(np.angle(fx + 1j * fy))
    bank = np.empty((scales * orientations, side, side), dtype=np.float64)
    k = 0
    for i in range(scales):
        f0 = 0.3 / (1.85**i)
        ang_width = 16 * orientations**2 / 32**2
        for j in range(orientations):
            t = theta + np.pi * j / orientations
            t = t + 2 * np.pi * (t < -np.pi) - 2 * np.pi * (t > np.pi)
            bank[k] = np.exp(-10 * 0.35 * (fr / side / f0 - 1) ** 2 - 2 * ang_width * np.pi * t**2)
            bank[k, 0, 0] = 0.0
            k += 1
    bank.setflags(write=False)
    return bank


def _rescale(img: np.ndarray) -> np.ndarray:
    img = img - img.min()
    peak = img.max()
    if peak > 0:
        img = 255.0 * img / peak
    return img


def _prefilter(img: np.ndarray, fc: float) -> np.ndarray:
    """Log transform, remove low frequencies, divide by local contrast."""
    w = 5
    s1 = fc / np.sqrt(np.log(2))
    img = np.log(img + 1)
    img = np.pad(img, w, mode="symmetric")
    n = img.shape[0]
    fx, fy = np.meshgrid(np.arange(-n / 2, n / 2), np.arange(-n / 2, n / 2))
    gf = np.fft.fftshift(np.exp(-(fx**2 + fy**2) / s1**2))
    out = img - np.real(np.fft.ifft2(np.fft.fft2(img) * gf))
    localstd = np.sqrt(np.abs(np.fft.ifft2(np.fft.fft2(out**2) * gf)))
    out = out / (0.2 + localstd)
    return out[w:-w, w:-w]


def _check_image(image, cfg: GistConfig) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"GIST needs a grayscale (2-D) image, got shape {img.shape}")
    if img.shape[0] != img.shape[1]:
        raise ValueError(f"GIST needs a square image, got {img.shape}")
    if img.shape[0] != cfg.image_side:
        raise ValueError(f"image side {img.shape[0]} != configured {cfg.image_side}; resize first")
    if not np.all(np.isfinite(img)):
        raise ValueError("image has non-finite pixels")
    return img


def gabor_responses(image, cfg: GistConfig = GistConfig()) -> np.ndarray:
    """Magnitude of every Gabor response, shape (n_filters, side, side)."""
    img = _rescale(_check_image(image, cfg))
    if cfg.prefilter:
        img = _prefilter(img, cfg.prefilter_fc)
    be = cfg.boundary_extension
    padded = np.pad(img, be, mode="symmetric") if be else img
    spectrum = np.fft.fft2(padded)
    bank = gabor_bank(padded.shape[0], cfg.scales, cfg.orientations_per_scale)
    side = cfg.image_side
    out = np.empty((cfg.n_filters, side, side), dtype=np.float64)
    for k in range(cfg.n_filters):
        resp = np.abs(np.fft.ifft2(spectrum * bank[k]))
        out[k] = resp[be : be + side, be : be + side]
    return out


def block_edges(side: int, blocks: int) -> np.ndarray:
    return np.floor(np.linspace(0, side, blocks + 1)).astype(int)


def block_pool(responses: np.ndarray, blocks: int, pooling: str = "mean") -> np.ndarray:
    """Pool each (side x side) response over a blocks x blocks grid.

    Output is filter-major; within a filter, blocks are row-major.
    """
    vals = responses**2 if pooling == "energy" else responses
    side = vals.shape[-1]
    e = block_edges(side, blocks)
    # sum over uneven blocks via cumulative sums along both axes
    rows = np.add.reduceat(vals, e[:-1], axis=1)
    sums = np.add.reduceat(rows, e[:-1], axis=2)
    counts = np.outer(np.diff(e), np.diff(e))
    return (sums / counts).reshape(vals.shape[0], -1).reshape(-1)


def gist_extract(image, cfg: GistConfig = GistConfig()) -> Descriptor:
    pooled = block_pool(gabor_responses(image, cfg), cfg.blocks, cfg.pooling)
    return Descriptor(pooled.astype(np.float32), normalized=False)


def load_gray(path: str | Path, side: int) -> np.ndarray:
    """Decode an image file, convert to grayscale and resize to side x side."""
    from PIL import Image

    with Image.open(path) as im:
        g = im.convert("L").resize((side, side), Image.BILINEAR)
        return np.asarray(g, dtype=np.float64)
