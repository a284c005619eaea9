"""Hard-negative mining of non-near-duplicate pairs from a query x pool design.

hn1 keeps the nearest pool image of every query. hn2 pools the
``knn_per_query`` nearest neighbours of every query and keeps the
``total_pairs`` globally closest candidates.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Label, NdPair
from .formats import DescriptorSet
from .index import FlatIndex


class Strategy(str, enum.Enum):
    HN1 = "hn1"
    HN2 = "hn2"


@dataclass(frozen=True)
class MiningConfig:
    strategy: Strategy = Strategy.HN1
    knn_per_query: int = 10
    total_pairs: int = 10_000
    threads: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.knn_per_query < 1 or self.total_pairs < 1:
            raise ValueError("knn_per_query and total_pairs must be >= 1")


@dataclass(frozen=True)
class MinedPair:
    query_id: str
    pool_id: str
    distance: float


@dataclass(frozen=True)
class HardNegativeSet:
    pairs: tuple[MinedPair, ...]
    strategy: Strategy
    n_queries: int  # K
    pool_size: int  # M
    knn_per_query: int | None = None

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def distances(self) -> np.ndarray:
        return np.array([p.distance for p in self.pairs], dtype=np.float64)

    @property
    def exact_regime(self) -> bool:
        """True when selection ran over every query x pool pair."""
        if self.strategy is Strategy.HN1:
            return True
        return self.knn_per_query is not None and self.knn_per_query >= self.pool_size

    def as_nd_pairs(self) -> list[NdPair]:
        return [NdPair(p.query_id, p.pool_id, Label.NND) for p in self.pairs]


def _neighbours(index: FlatIndex, queries: DescriptorSet, k: int, threads):
    """k nearest pool neighbours per query, with the query's own id removed."""
    in_pool = set(index.ids) & set(queries.ids)
    kk = min(k + (1 if in_pool else 0), len(index))
    raw = index.knn_batch(queries.matrix, kk, threads=threads)
    out = []
    for qid, nbrs in zip(queries.ids, raw):
        nbrs = [n for n in nbrs if n.id != qid][:k]
        out.append(nbrs)
    return out


def _check(index: FlatIndex, queries: DescriptorSet, query_ids=None) -> DescriptorSet:
    if query_ids is not None:
        missing = [q for q in query_ids if q not in queries]
        if missing:
            raise KeyError(f"no descriptor for query id {missing[0]!r}")
        queries = queries.subset(query_ids)
    if len(queries) < 1:
        raise ValueError("at least one query is required")
    if queries.dim != index.dim:
        raise ValueError(f"dimension mismatch: queries {queries.dim}, pool {index.dim}")
    return queries


def mine_hn1(index: FlatIndex, queries: DescriptorSet, cfg: MiningConfig = MiningConfig(),
             query_ids=None) -> HardNegativeSet:
    queries = _check(index, queries, query_ids)
    pairs = []
    for qid, nbrs in zip(queries.ids, _neighbours(index, queries, 1, cfg.threads)):
        if not nbrs:
            raise ValueError(f"query {qid!r} has no pool neighbour other than itself")
        pairs.append(MinedPair(qid, nbrs[0].id, nbrs[0].distance))
    return HardNegativeSet(tuple(pairs), Strategy.HN1, len(queries), len(index), 1)


def mine_hn2(index: FlatIndex, queries: DescriptorSet, cfg: MiningConfig = MiningConfig(),
             query_ids=None) -> HardNegativeSet:
    queries = _check(index, queries, query_ids)
    pool_pos = {pid: i for i, pid in enumerate(index.ids)}
    cand = []
    for qi, (qid, nbrs) in enumerate(zip(queries.ids, _neighbours(index, queries, cfg.knn_per_query, cfg.threads))):
        for n in nbrs:
            cand.append((n.distance, qi, pool_pos[n.id], qid, n.id))
    cand.sort(key=lambda c: (c[0], c[1], c[2]))
    chosen = cand[: cfg.total_pairs]
    pairs = tuple(MinedPair(qid, pid, d) for d, _, _, qid, pid in chosen)
    return HardNegativeSet(pairs, Strategy.HN2, len(queries), len(index), cfg.knn_per_query)


def mine(index: FlatIndex, queries: DescriptorSet, cfg: MiningConfig = MiningConfig(),
         query_ids=None) -> HardNegativeSet:
    if cfg.strategy is Strategy.HN1:
        return mine_hn1(index, queries, cfg, query_ids)
    return mine_hn2(index, queries, cfg, query_ids)


def specificity_floor(n_queries: int, pool_size: int) -> float:
    """Smallest FP rate observable from K queries against a pool of M images: 1/(K*M)."""
    if n_queries < 1 or pool_size < 1:
        raise ValueError("K and M must be >= 1")
    return 1.0 / (n_queries * pool_size)


def project_fp_rate(fp_rate_on_mined: float, pool_size: int) -> float:
    """Collection-level FP rate implied by a rate measured on mined pairs (rate / M)."""
    if not 0.0 <= fp_rate_on_mined <= 1.0:
        raise ValueError("fp rate must lie in [0, 1]")
    if pool_size < 1:
        raise ValueError("M must be >= 1")
    return fp_rate_on_mined / pool_size


# --- review / relabel files ---------------------------------------------------

_FIELDS = ["query_id", "pool_id", "distance", "strategy"]


def write_mined(path: str | Path, hn: HardNegativeSet, with_label: bool = False) -> None:
    """CSV query_id,pool_id,distance,strategy; ``with_label`` adds an editable label column (NND)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_FIELDS + (["label"] if with_label else []))
        for p in hn.pairs:
            row = [p.query_id, p.pool_id, repr(p.distance), hn.strategy.value]
            w.writerow(row + (["NND"] if with_label else []))


def read_mined(path: str | Path, n_queries: int | None = None, pool_size: int | None = None,
               knn_per_query: int | None = None) -> HardNegativeSet:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(_FIELDS) <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header {','.join(_FIELDS)}")
        rows = list(reader)
    strategies = {r["strategy"] for r in rows}
    if len(strategies) > 1:
        raise ValueError(f"{path}: mixed strategies {sorted(strategies)}")
    strategy = Strategy(strategies.pop()) if strategies else Strategy.HN1
    pairs = tuple(MinedPair(r["query_id"], r["pool_id"], float(r["distance"])) for r in rows)
    k = n_queries if n_queries is not None else len({p.query_id for p in pairs})
    m = pool_size if pool_size is not None else len({p.pool_id for p in pairs})
    return HardNegativeSet(pairs, strategy, k, m, knn_per_query)


def apply_relabel(hn: HardNegativeSet, path: str | Path) -> tuple[HardNegativeSet, list[NdPair]]:
    """Move pairs relabelled IND/NIND in a review file out of the negative set.

    Returns the remaining hard negatives and the new positive pairs.
    """
    relabel: dict[tuple[str, str], Label] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise ValueError(f"{path}: relabel file needs a label column")
        for r in reader:
            relabel[(r["query_id"], r["pool_id"])] = Label(r["label"].strip().upper())
    keep, promoted = [], []
    for p in hn.pairs:
        lab = relabel.get((p.query_id, p.pool_id), Label.NND)
        if lab.positive:
            promoted.append(NdPair(p.query_id, p.pool_id, lab))
        else:
            keep.append(p)
    remaining = HardNegativeSet(tuple(keep), hn.strategy, hn.n_queries, hn.pool_size, hn.knn_per_query)
    return remaining, promoted
