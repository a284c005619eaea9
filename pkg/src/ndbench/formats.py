"""Binary file formats: feature maps (NDFM) and descriptor matrices (NDBD + .ids sidecar)."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors.core import FeatureMap

FM_MAGIC = b"NDFM"
DM_MAGIC = b"NDBD"
VERSION = 1
DM_HEADER = 32
DTYPE_FLOAT32 = 0

_FM_HEAD = struct.Struct("<4sIIII")
_DM_HEAD = struct.Struct("<4sIQIB")


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class DescriptorSet:
    """Row-aligned ids and float32 descriptor matrix."""

    ids: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if m.ndim != 2:
            raise ValueError("descriptor matrix must be 2-D")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != m.shape[0]:
            raise ValueError(f"{len(ids)} ids for {m.shape[0]} rows")
        if len(set(ids)) != len(ids):
            raise ValueError("descriptor ids must be unique")
        if not np.all(np.isfinite(m)):
            raise ValueError("descriptor matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_pos", {k: i for i, k in enumerate(ids)})

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row(self, id_: str) -> np.ndarray:
        return self.matrix[self._pos[id_]]

    def position(self, id_: str) -> int:
        return self._pos[id_]

    def __contains__(self, id_) -> bool:
        return id_ in self._pos

    def subset(self, ids) -> "DescriptorSet":
        ids = list(ids)
        missing = [i for i in ids if i not in self._pos]
        if missing:
            raise KeyError(f"no descriptor for id {missing[0]!r}")
        return DescriptorSet(tuple(ids), self.matrix[[self._pos[i] for i in ids]])


def write_feature_map(path: str | Path, fmap: FeatureMap) -> None:
    with open(path, "wb") as fh:
        fh.write(_FM_HEAD.pack(FM_MAGIC, VERSION, fmap.height, fmap.width, fmap.channels))
        fh.write(fmap.data.astype("<f4").tobytes(order="C"))


def read_feature_map(path: str | Path, post_relu: bool = True) -> FeatureMap:
    raw = Path(path).read_bytes()
    if len(raw) < _FM_HEAD.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, h, w, c = _FM_HEAD.unpack_from(raw)
    if magic != FM_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    n = h * w * c
    body = raw[_FM_HEAD.size :]
    if len(body) != 4 * n:
        raise FormatError(f"{path}: expected {n} floats, found {len(body) // 4}")
    data = np.frombuffer(body, dtype="<f4").reshape(h, w, c)
    return FeatureMap(data, post_relu=post_relu)


def ids_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".ids")


def write_descriptors(path: str | Path, ds: DescriptorSet) -> None:
    count, dim = ds.matrix.shape
    head = _DM_HEAD.pack(DM_MAGIC, VERSION, count, dim, DTYPE_FLOAT32)
    with open(path, "wb") as fh:
        fh.write(head + b"\x00" * (DM_HEADER - len(head)))
        fh.write(ds.matrix.astype("<f4").tobytes(order="C"))
    ids_path(path).write_text("".join(f"{i}\n" for i in ds.ids), encoding="utf-8")


def read_descriptors(path: str | Path) -> DescriptorSet:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < DM_HEADER:
        raise FormatError(f"{path}: truncated header")
    magic, version, count, dim, dtype = _DM_HEAD.unpack_from(raw)
    if magic != DM_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    body = raw[DM_HEADER:]
    if len(body) != 4 * count * dim:
        raise FormatError(f"{path}: expected {count}x{dim} floats")
    matrix = np.frombuffer(body, dtype="<f4").reshape(count, dim)
    sidecar = ids_path(path)
    if not sidecar.exists():
        raise FormatError(f"{path}: missing ids sidecar {sidecar}")
    ids = sidecar.read_text(encoding="utf-8").splitlines()
    if len(ids) != count:
        raise FormatError(f"{sidecar}: {len(ids)} ids for {count} rows")
    return DescriptorSet(tuple(ids), matrix)
