"""PCA whitening trained without dimensionality reduction."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Descriptor, as_descriptor

DEFAULT_EPSILON = 1e-10


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (d, d), rows are principal directions
    eigenvalues: np.ndarray  # (d,), descending
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        comp = np.asarray(self.components, dtype=np.float64)
        ev = np.asarray(self.eigenvalues, dtype=np.float64).reshape(-1)
        d = mean.shape[0]
        if comp.shape != (d, d) or ev.shape != (d,):
            raise ValueError("inconsistent PCA shapes")
        if np.any(ev < 0):
            raise ValueError("eigenvalues must be nonnegative")
        if np.any(np.diff(ev) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        for a in (mean, comp, ev):
            a.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "PcaModel":
        return cls(np.zeros(dim), np.eye(dim), np.ones(dim), epsilon=0.0)

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            np.savez(fh, mean=self.mean, components=self.components,
                     eigenvalues=self.eigenvalues, epsilon=np.float64(self.epsilon))

    @classmethod
    def load(cls, path: str | Path) -> "PcaModel":
        with np.load(path) as z:
            return cls(z["mean"], z["components"], z["eigenvalues"], float(z["epsilon"]))


def pca_train(training, epsilon: float = DEFAULT_EPSILON) -> PcaModel:
    """Fit mean and full-rank eigenbasis of the (1/n) sample covariance.

    ``training`` is a sequence of Descriptors or an (n, d) array. Eigenvalues of a
    rank-deficient covariance are clipped at zero; ``epsilon`` keeps whitening finite.
    """
    x = _as_matrix(training)
    if x.shape[0] < 2:
        raise ValueError("PCA needs at least 2 training samples")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / x.shape[0]
    cov = (cov + cov.T) / 2
    ev, vecs = np.linalg.eigh(cov)
    order = np.argsort(ev, kind="stable")[::-1]
    ev = np.clip(ev[order], 0.0, None)
    vecs = vecs[:, order]
    # deterministic sign: largest-magnitude entry of each direction is positive
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    return PcaModel(mean, vecs.T, ev, epsilon)


def whiten_raw(v, pca: PcaModel) -> np.ndarray:
    """diag(1/sqrt(eigenvalues+eps)) . components . (v - mean), without normalization."""
    x = np.asarray(v.values if isinstance(v, Descriptor) else v, dtype=np.float64)
    if x.shape[-1] != pca.dim:
        raise ValueError(f"dimension mismatch: vector has {x.shape[-1]}, PCA expects {pca.dim}")
    scale = 1.0 / np.sqrt(pca.eigenvalues + pca.epsilon)
    return ((x - pca.mean) @ pca.components.T) * scale


def pca_whiten(v, pca: PcaModel) -> Descriptor:
    """Whiten then L2-normalize. A vector equal to the mean yields the zero sentinel."""
    return as_descriptor(whiten_raw(v, pca))


def _as_matrix(training) -> np.ndarray:
    if isinstance(training, np.ndarray):
        x = training
    else:
        x = np.stack([t.values if isinstance(t, Descriptor) else np.asarray(t) for t in training])
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("training data must be 2-D")
    return x
