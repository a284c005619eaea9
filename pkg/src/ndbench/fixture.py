"""Synthetic desk-scale benchmark: Gaussian distractors plus tight near-duplicate clusters."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Label, NdCluster, NdPair, enumerate_pairs, write_clusters, write_id_list, write_pairs
from .formats import DescriptorSet, write_descriptors


@dataclass(frozen=True)
class FixtureConfig:
    dim: int = 16
    pool: int = 2000
    queries: int = 200
    clusters: int = 60
    max_cluster_size: int = 4
    ind_noise: float = 0.15
    nind_noise: float = 0.45
    ind_fraction: float = 0.4
    seed: int = 0


@dataclass(frozen=True)
class Fixture:
    descriptors: DescriptorSet
    clusters: tuple[NdCluster, ...]
    pairs: tuple[NdPair, ...]
    query_ids: tuple[str, ...]
    pool_ids: tuple[str, ...]


def make_fixture(cfg: FixtureConfig = FixtureConfig()) -> Fixture:
    rng = np.random.default_rng(cfg.seed)
    ids, rows = [], []
    clusters, pairs = [], []
    for c in range(cfg.clusters):
        size = int(rng.integers(2, cfg.max_cluster_size + 1))
        kind = Label.IND if rng.random() < cfg.ind_fraction else Label.NIND
        noise = cfg.ind_noise if kind is Label.IND else cfg.nind_noise
        center = rng.standard_normal(cfg.dim)
        members = [f"c{c:04d}_{j}" for j in range(size)]
        for m in members:
            ids.append(m)
            rows.append(center + noise * rng.standard_normal(cfg.dim))
        cl = NdCluster(c, kind, frozenset(members))
        clusters.append(cl)
        pairs.extend(enumerate_pairs(cl))
    query_ids = [f"q{i:05d}" for i in range(cfg.queries)]
    pool_ids = [f"p{i:06d}" for i in range(cfg.pool)]
    for i in query_ids + pool_ids:
        ids.append(i)
        rows.append(rng.standard_normal(cfg.dim))
    ds = DescriptorSet(tuple(ids), np.asarray(rows, dtype=np.float32))
    return Fixture(ds, tuple(clusters), tuple(pairs), tuple(query_ids), tuple(pool_ids))


def write_fixture(out_dir: str | Path, fx: Fixture, cfg: FixtureConfig) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "descriptors": out / "descriptors.ndbd",
        "pairs": out / "pairs.csv",
        "clusters": out / "clusters.json",
        "queries": out / "queries.txt",
        "pool": out / "pool.txt",
        "config": out / "pipeline.cfg",
    }
    write_descriptors(paths["descriptors"], fx.descriptors)
    write_pairs(paths["pairs"], fx.pairs)
    write_clusters(paths["clusters"], fx.clusters)
    write_id_list(paths["queries"], fx.query_ids)
    write_id_list(paths["pool"], fx.pool_ids)
    lines = [
        "# synthetic desk-scale benchmark",
        "descriptors = descriptors.ndbd",
        "pairs = pairs.csv",
        "queries = queries.txt",
        "pool = pool.txt",
        "strategy = hn2",
        "knn_per_query = 10",
        f"total_pairs = {2 * cfg.queries}",
        "fp_rates = 0.01,0.05,0.1",
        "caps = none,2,4,6,8,10",
        "out_dir = report",
        f"seed = {cfg.seed}",
    ]
    paths["config"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths
