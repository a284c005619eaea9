"""Exact Euclidean search over a flat descriptor matrix.

Queries are answered in two passes. A float32 matrix product screens
candidates using squared distances ||q||^2 + ||x||^2 - 2 q.x, widened by a
worst-case rounding bound so no true answer is lost. Survivors are then
re-scored exactly as sqrt(sum((x - q)^2)) in float64. Reported distances
come only from the second pass, so results do not depend on BLAS threading,
block size or worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .formats import DescriptorSet

DEFAULT_BLOCK = 256
_EPS32 = float(np.finfo(np.float32).eps)


@dataclass(frozen=True)
class Neighbor:
    id: str
    distance: float


class FlatIndex:
    def __init__(self, matrix, ids: Sequence[str]):
        m = np.ascontiguousarray(matrix, dtype=np.float32)
        if m.ndim != 2:
            raise ValueError("descriptor matrix must be 2-D")
        if m.shape[0] < 1:
            raise ValueError("index needs at least one row")
        if len(ids) != m.shape[0]:
            raise ValueError(f"{len(ids)} ids for {m.shape[0]} rows")
        if not np.all(np.isfinite(m)):
            raise ValueError("descriptor matrix has non-finite entries")
        m.setflags(write=False)
        self.matrix = m
        self.ids = tuple(str(i) for i in ids)
        norms = np.einsum("ij,ij->i", m.astype(np.float64), m.astype(np.float64))
        self._sqnorm32 = norms.astype(np.float32)
        self._max_norm = float(np.sqrt(norms.max()))

    @classmethod
    def from_set(cls, ds: DescriptorSet) -> "FlatIndex":
        return cls(ds.matrix, ds.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def _queries(self, queries) -> np.ndarray:
        q = np.asarray(queries, dtype=np.float32)
        if q.ndim == 1:
            q = q[None, :]
        if q.ndim != 2 or q.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: queries have shape {q.shape}, index dim {self.dim}")
        if not np.all(np.isfinite(q)):
            raise ValueError("query has non-finite entries")
        return np.ascontiguousarray(q)

    def _approx_sq(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Approximate squared distances for a query block and a per-query error bound."""
        qn = np.einsum("ij,ij->i", q.astype(np.float64), q.astype(np.float64))
        approx = self._sqnorm32[None, :] + qn.astype(np.float32)[:, None] - 2.0 * (q @ self.matrix.T)
        # |error| <= (d + 4) * eps * (|q| + |x|max)^2, doubled for safety
        bound = 2.0 * (self.dim + 4) * _EPS32 * (np.sqrt(qn) + self._max_norm) ** 2 + 1e-30
        return approx, bound

    def _exact(self, q: np.ndarray, rows: np.ndarray) -> np.ndarray:
        diff = self.matrix[rows].astype(np.float64) - q.astype(np.float64)
        return np.sqrt((diff * diff).sum(axis=1))

    def _rank(self, q: np.ndarray, rows: np.ndarray, limit: int | None, t: float | None) -> list[Neighbor]:
        dist = self._exact(q, rows)
        if t is not None:
            keep = dist < t
            rows, dist = rows[keep], dist[keep]
        order = np.lexsort((rows, dist))  # ties broken by row position
        if limit is not None:
            order = order[:limit]
        return [Neighbor(self.ids[r], float(d)) for r, d in zip(rows[order], dist[order])]

    def _knn_block(self, q: np.ndarray, k: int) -> list[list[Neighbor]]:
        n = len(self)
        kk = min(k, n)
        if kk == n:
            return [self._rank(qi, np.arange(n), kk, None) for qi in q]
        approx, bound = self._approx_sq(q)
        kth = np.partition(approx, kk - 1, axis=1)[:, kk - 1]
        cut = kth + 2 * bound.astype(np.float32)
        out = []
        for i, qi in enumerate(q):
            rows = np.flatnonzero(approx[i] <= cut[i])
            out.append(self._rank(qi, rows, kk, None))
        return out

    def _range_block(self, q: np.ndarray, t: float, cap: int | None) -> list[list[Neighbor]]:
        if math.isinf(t):
            if cap is None:
                return [self._rank(qi, np.arange(len(self)), None, None) for qi in q]
            return self._knn_block(q, cap)
        approx, bound = self._approx_sq(q)
        cut = np.float32(t * t) + bound.astype(np.float32)
        out = []
        for i, qi in enumerate(q):
            rows = np.flatnonzero(approx[i] <= cut[i])
            out.append(self._rank(qi, rows, cap, t))
        return out

    def _batched(self, queries, fn, block_size: int, threads: int | None):
        q = self._queries(queries)
        if block_size < 1:
            raise ValueError("block_size must be >= 1")
        blocks = [q[s : s + block_size] for s in range(0, q.shape[0], block_size)]
        workers = threads or os.cpu_count() or 1
        if workers == 1 or len(blocks) == 1:
            parts = [fn(b) for b in blocks]
        else:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                parts = list(ex.map(fn, blocks))
        return [r for part in parts for r in part]

    def knn_batch(self, queries, k: int, block_size: int = DEFAULT_BLOCK,
                  threads: int | None = None) -> list[list[Neighbor]]:
        if k < 1:
            raise ValueError("k must be >= 1")
        return self._batched(queries, lambda b: self._knn_block(b, k), block_size, threads)

    def range_batch(self, queries, t: float, cap: int | None = None, block_size: int = DEFAULT_BLOCK,
                    threads: int | None = None) -> list[list[Neighbor]]:
        if not t > 0:
            raise ValueError("threshold must be > 0")
        if cap is not None and cap < 1:
            raise ValueError("cap must be >= 1 or None")
        return self._batched(queries, lambda b: self._range_block(b, t, cap), block_size, threads)


def build(descriptors, ids: Sequence[str]) -> FlatIndex:
    return FlatIndex(descriptors, ids)


def knn(index: FlatIndex, query, k: int) -> list[Neighbor]:
    return index.knn_batch(np.asarray(getattr(query, "values", query)), k, threads=1)[0]


def range_query(index: FlatIndex, query, t: float, cap: int | None = None) -> list[Neighbor]:
    """All rows with distance < t, ascending, truncated to ``cap`` (None = unlimited)."""
    return index.range_batch(np.asarray(getattr(query, "values", query)), t, cap, threads=1)[0]


def pair_distance(a, b) -> float:
    """Exact Euclidean distance on the float32 storage grid, symmetric bit-for-bit."""
    a = np.asarray(getattr(a, "values", a), dtype=np.float32).astype(np.float64)
    b = np.asarray(getattr(b, "values", b), dtype=np.float32).astype(np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = (a - b)[None, :]
    return float(np.sqrt((d * d).sum(axis=1))[0])
