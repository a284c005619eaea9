"""Image identities, near-duplicate ground truth and exact-duplicate removal."""
from __future__ import annotations

import csv
import enum
import hashlib
import itertools
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)


class Label(str, enum.Enum):
    IND = "IND"
    NIND = "NIND"
    NND = "NND"

    @property
    def positive(self) -> bool:
        return self is not Label.NND


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: str
    content_hash: str  # lowercase hex, 128-bit

    @classmethod
    def from_file(cls, id_: str, path: str | Path) -> "ImageRecord":
        return cls(id_, str(path), md5_file(path))


def md5_file(path: str | Path, chunk: int = 1 << 20) -> str:
    h = hashlib.md5()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(chunk), b""):
            h.update(block)
    return h.hexdigest()


@dataclass(frozen=True, order=True)
class NdPair:
    """Unordered image pair; endpoints are stored sorted."""

    id_a: str
    id_b: str
    label: Label

    def __post_init__(self):
        a, b = str(self.id_a), str(self.id_b)
        if a == b:
            raise ValueError(f"self-pair ({a}, {a})")
        if b < a:
            a, b = b, a
        object.__setattr__(self, "id_a", a)
        object.__setattr__(self, "id_b", b)
        object.__setattr__(self, "label", Label(self.label))

    @property
    def key(self) -> tuple[str, str]:
        return (self.id_a, self.id_b)


@dataclass(frozen=True)
class NdCluster:
    cluster_id: int
    kind: Label
    members: frozenset[str]
    # set when the component mixes IND and NIND edges; kind is then NIND
    mixed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        object.__setattr__(self, "kind", Label(self.kind))
        if self.kind is Label.NND:
            raise ValueError("clusters are IND or NIND")
        if len(self.members) < 2:
            raise ValueError(f"cluster {self.cluster_id} has fewer than 2 members")

    @property
    def head(self) -> str:
        return min(self.members)


def dedup_exact(records: Iterable[ImageRecord]) -> tuple[list[ImageRecord], list[tuple[str, str]]]:
    """Keep the smallest id of every content-hash group; report the rest with their representative."""
    records = list(records)
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("image ids must be unique")
    rep: dict[str, str] = {}
    for r in sorted(records, key=lambda r: r.id):
        rep.setdefault(r.content_hash, r.id)
    kept = [r for r in records if rep[r.content_hash] == r.id]
    removed = [(r.id, rep[r.content_hash]) for r in records if rep[r.content_hash] != r.id]
    return kept, removed


class _DisjointSet:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller id becomes the root so the result is order independent
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def build_clusters(pairs: Iterable[NdPair]) -> list[NdCluster]:
    """Connected components of the positive-pair graph (transitive closure).

    A component with any NIND edge is typed NIND and flagged ``mixed`` if it also
    has IND edges. Clusters are numbered by their smallest member id.
    """
    pairs = list(pairs)
    ds = _DisjointSet()
    for p in pairs:
        if not p.label.positive:
            raise ValueError(f"build_clusters got a non-positive pair {p.key}")
        ds.union(p.id_a, p.id_b)
    groups: dict[str, set[str]] = {}
    for node in list(ds.parent):
        groups.setdefault(ds.find(node), set()).add(node)
    labels: dict[str, set[Label]] = {}
    for p in pairs:
        labels.setdefault(ds.find(p.id_a), set()).add(p.label)
    clusters = []
    for cid, root in enumerate(sorted(groups, key=lambda r: min(groups[r]))):
        kinds = labels[root]
        kind = Label.NIND if Label.NIND in kinds else Label.IND
        mixed = len(kinds) > 1
        if mixed:
            log.warning("cluster %d mixes IND and NIND edges; typed NIND", cid)
        clusters.append(NdCluster(cid, kind, frozenset(groups[root]), mixed))
    return clusters


def enumerate_pairs(cluster: NdCluster) -> list[NdPair]:
    members = sorted(cluster.members)
    return [NdPair(a, b, cluster.kind) for a, b in itertools.combinations(members, 2)]


@dataclass(frozen=True)
class GroundTruth:
    pairs: frozenset[NdPair]
    clusters: tuple[NdCluster, ...]
    query_set: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "query_set", frozenset(self.query_set))
        keys = [p.key for p in self.pairs]
        if len(set(keys)) != len(keys):
            raise ValueError("ground truth contains the same pair with two labels")
        owner = {m: c.cluster_id for c in self.clusters for m in c.members}
        for p in self.pairs:
            if p.label is Label.NND and p.id_a in owner and owner.get(p.id_a) == owner.get(p.id_b):
                raise ValueError(f"NND pair {p.key} lies inside cluster {owner[p.id_a]}")
        overlap = self.query_set & owner.keys()
        if overlap:
            raise ValueError(f"negative queries inside clusters: {sorted(overlap)[:5]}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[NdPair], query_set: Iterable[str] = ()) -> "GroundTruth":
        pairs = frozenset(pairs)
        clusters = build_clusters(p for p in pairs if p.label.positive)
        return cls(pairs, tuple(clusters), frozenset(query_set))

    @property
    def positive_pairs(self) -> list[NdPair]:
        return sorted(p for p in self.pairs if p.label.positive)

    @property
    def negative_pairs(self) -> list[NdPair]:
        return sorted(p for p in self.pairs if p.label is Label.NND)


# --- file formats -----------------------------------------------------------

def write_pairs(path: str | Path, pairs: Iterable[NdPair]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id_a", "id_b", "label"])
        for p in sorted(pairs):
            w.writerow([p.id_a, p.id_b, p.label.value])


def read_pairs(path: str | Path) -> list[NdPair]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id_a", "id_b", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header id_a,id_b,label")
        pairs = [NdPair(r["id_a"], r["id_b"], Label(r["label"].strip().upper())) for r in reader]
    keys = [p.key for p in pairs]
    if len(set(keys)) != len(keys):
        raise ValueError(f"{path}: duplicate pairs")
    return pairs


def write_clusters(path: str | Path, clusters: Iterable[NdCluster]) -> None:
    data = [{"cluster_id": c.cluster_id, "kind": c.kind.value, "members": sorted(c.members)}
            for c in clusters]
    Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


def read_clusters(path: str | Path) -> list[NdCluster]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array")
    return [NdCluster(int(d["cluster_id"]), Label(d["kind"]), frozenset(d["members"])) for d in data]


def write_manifest(path: str | Path, records: Iterable[ImageRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "path", "md5hex"])
        for r in records:
            w.writerow([r.id, r.path, r.content_hash])


def read_manifest(path: str | Path) -> list[ImageRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "path"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header id,path,md5hex")
        return [ImageRecord(r["id"], r["path"], (r.get("md5hex") or "").lower()) for r in reader]


def read_id_list(path: str | Path) -> list[str]:
    return [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]


def write_id_list(path: str | Path, ids: Iterable[str]) -> None:
    Path(path).write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")
