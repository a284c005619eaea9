"""Range-query simulation: average recall of positive queries and FPs per negative query.

Every cluster contributes its smallest id as a positive query; the other
members go into the database next to a distractor pool. Negative queries are
run against the same database and every hit counts as a false positive.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import GroundTruth, NdCluster
from .formats import DescriptorSet
from .index import FlatIndex, Neighbor


@dataclass(frozen=True, eq=False)
class SimDesign:
    positive_queries: tuple[tuple[str, frozenset[str]], ...]
    negative_queries: tuple[str, ...]
    database: FlatIndex
    queries: DescriptorSet  # descriptors of every query id
    thresholds: tuple[float, ...] = ()
    caps: tuple[int | None, ...] = (None,)

    def __post_init__(self):
        db = set(self.database.ids)
        for qid, expected in self.positive_queries:
            if not expected:
                raise ValueError(f"positive query {qid!r} has no expected near-duplicates")
            missing = expected - db
            if missing:
                raise ValueError(f"expected ids of {qid!r} missing from database: {sorted(missing)[:3]}")
        for qid in self.negative_queries:
            if qid in db:
                raise ValueError(f"negative query {qid!r} is in the database")
        for qid in [q for q, _ in self.positive_queries] + list(self.negative_queries):
            if qid not in self.queries:
                raise KeyError(f"no descriptor for query id {qid!r}")

    def with_grid(self, thresholds: Iterable[float], caps: Iterable[int | None]) -> "SimDesign":
        return SimDesign(self.positive_queries, self.negative_queries, self.database, self.queries,
                         tuple(thresholds), tuple(caps))


@dataclass(frozen=True, eq=False)
class SimPoint:
    threshold: float
    cap: int | None
    avg_recall: float
    recall_se: float
    avg_fp: float
    fp_se: float
    fp_per_query: np.ndarray  # one entry per negative query


@dataclass(frozen=True)
class SimResult:
    points: tuple[SimPoint, ...]

    def at(self, threshold: float, cap: int | None) -> SimPoint:
        for p in self.points:
            if p.threshold == threshold and p.cap == cap:
                return p
        raise KeyError((threshold, cap))


def build_design(gt: GroundTruth, descriptors: DescriptorSet, pool_ids: Sequence[str],
                 negative_queries: Sequence[str] | None = None,
                 thresholds: Sequence[float] = (), caps: Sequence[int | None] = (None,)) -> SimDesign:
    """Assemble queries and database from ground-truth clusters and a distractor pool.

    ``negative_queries`` defaults to the ground truth's query set. Negative
    queries and cluster heads are kept out of the database.
    """
    if not gt.clusters:
        raise ValueError("ground truth has no clusters")
    positives = []
    db_ids: list[str] = []
    for c in sorted(gt.clusters, key=lambda c: c.head):
        head = c.head
        rest = frozenset(c.members - {head})
        positives.append((head, rest))
        db_ids.extend(sorted(rest))
    negq = tuple(sorted(gt.query_set if negative_queries is None else set(negative_queries)))
    heads = {h for h, _ in positives}
    excluded = heads | set(negq) | set(db_ids)
    db_ids.extend(p for p in pool_ids if p not in excluded)
    missing = [i for i in db_ids if i not in descriptors]
    if missing:
        raise KeyError(f"no descriptor for database id {missing[0]!r}")
    db = descriptors.subset(db_ids)
    qs = descriptors.subset(sorted(heads) + list(negq))
    return SimDesign(tuple(positives), negq, FlatIndex.from_set(db), qs, tuple(thresholds), tuple(caps))


def database_size(clusters: Iterable[NdCluster]) -> int:
    return sum(len(c.members) - 1 for c in clusters)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if len(x) == 0:
        return math.nan, math.nan
    if len(x) == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _hits(results: list[Neighbor], t: float, cap: int | None) -> list[Neighbor]:
    hits = [n for n in results if n.distance < t]
    return hits if cap is None else hits[:cap]


def run_sim(design: SimDesign, threads: int | None = None) -> SimResult:
    if not design.thresholds or not design.caps:
        raise ValueError("thresholds and caps must be nonempty")
    t_max = max(design.thresholds)
    db = design.database
    pos_ids = [q for q, _ in design.positive_queries]

    def search(ids):
        if not ids:
            return []
        if t_max <= 0:
            return [[] for _ in ids]
        return db.range_batch(design.queries.subset(ids).matrix, t_max, None, threads=threads)

    # one uncapped search at the largest threshold; every (t, cap) is a prefix of it
    pos_res = search(pos_ids)
    neg_res = search(list(design.negative_queries))
    points = []
    for t in design.thresholds:
        for cap in design.caps:
            recall = np.array([
                len({n.id for n in _hits(r, t, cap)} & expected) / len(expected)
                for r, (_, expected) in zip(pos_res, design.positive_queries)
            ], dtype=np.float64)
            fps = np.array([len(_hits(r, t, cap)) for r in neg_res], dtype=np.float64)
            rm, rse = _mean_se(recall)
            fm, fse = _mean_se(fps)
            points.append(SimPoint(t, cap, rm, rse, fm, fse, fps))
    return SimResult(tuple(points))


def write_sim_csv(path: str | Path, result: SimResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "cap", "avg_recall", "recall_se", "avg_fp", "fp_se"])
        for p in result.points:
            w.writerow([repr(p.threshold), "" if p.cap is None else p.cap,
                        repr(p.avg_recall), repr(p.recall_se), repr(p.avg_fp), repr(p.fp_se)])
