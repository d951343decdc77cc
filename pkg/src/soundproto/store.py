"""Embedding data types, cosine similarity, and the ATPE binary store format.

Vectors are held as unit-norm float32 (matching the on-disk precision);
all similarity arithmetic accumulates in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, FormatError, ZeroVector

MAGIC = b"ATPE"
FORMAT_VERSION = 1

MODALITY_AUDIO = "audio"
MODALITY_TEXT = "text"
_MODALITY_CODES = {MODALITY_AUDIO: 0, MODALITY_TEXT: 1}
_MODALITY_NAMES = {0: MODALITY_AUDIO, 1: MODALITY_TEXT}


def normalize(v) -> np.ndarray:
    """Scale v to unit L2 norm (float64). Raises ZeroVector on degenerate input."""
    v = np.asarray(v, dtype=np.float64)
    if v.size < 1:
        raise ZeroVector("empty vector")
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise ZeroVector(f"vector norm {norm} below 1e-12")
    return v / norm


def _unit_dot(a: np.ndarray, b: np.ndarray) -> float:
    # Elementwise product then pairwise sum: symmetric in (a, b) bit-for-bit.
    s = float(np.sum(a.astype(np.float64) * b.astype(np.float64)))
    return min(1.0, max(-1.0, s))


@dataclass(frozen=True, eq=False)
class Embedding:
    """A unit-norm vector with modality tag and optional class label.

    Vectors are normalized at construction when off unit norm by more than
    1e-6; already-unit input passes through bit-exact (keeps store
    round-trips stable). The pre-normalization norm is kept in raw_norm
    for diagnostics.
    """

    id: str
    modality: str
    vector: np.ndarray
    label: str | None = None
    raw_norm: float = field(default=1.0, compare=False)

    def __post_init__(self):
        if not self.id:
            raise ValueError("embedding id must be non-empty")
        if self.modality not in _MODALITY_CODES:
            raise ValueError(f"unknown modality {self.modality!r}")
        v = np.asarray(self.vector, dtype=np.float32)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("vector must be a non-empty 1-D sequence")
        norm = float(np.linalg.norm(v.astype(np.float64)))
        if abs(norm - 1.0) > 1e-6:
            v = normalize(v).astype(np.float32)
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "raw_norm", norm)

    @property
    def dim(self) -> int:
        return int(self.vector.size)

    def __eq__(self, other):
        if not isinstance(other, Embedding):
            return NotImplemented
        return (
            self.id == other.id
            and self.modality == other.modality
            and self.label == other.label
            and self.vector.tobytes() == other.vector.tobytes()
        )

    def __hash__(self):
        return hash((self.id, self.modality, self.label, self.vector.tobytes()))


def cosine_similarity(a, b) -> float:
    """Cosine similarity between two unit vectors, clamped to [-1, 1].

    Accepts any objects exposing .vector/.dim (Embedding, Prototype).
    """
    if a.dim != b.dim:
        raise DimMismatch(f"dim {a.dim} != {b.dim}")
    return _unit_dot(a.vector, b.vector)


class EmbeddingSet:
    """Immutable ordered collection of same-dimension embeddings."""

    def __init__(self, dim: int, records: list[Embedding]):
        if dim < 1:
            raise ValueError("dim must be positive")
        records = list(records)
        seen = set()
        for r in records:
            if r.dim != dim:
                raise DimMismatch(f"record {r.id!r} has dim {r.dim}, set dim {dim}")
            if r.id in seen:
                raise ValueError(f"duplicate embedding id {r.id!r}")
            seen.add(r.id)
        self.dim = int(dim)
        self.records = tuple(records)

    @classmethod
    def from_records(cls, records: list[Embedding]) -> "EmbeddingSet":
        if not records:
            raise ValueError("cannot infer dim from an empty record list")
        return cls(records[0].dim, records)

    @property
    def vocabulary(self) -> tuple[str, ...]:
        """Distinct labels, sorted lexicographically (fixes class indices)."""
        return tuple(sorted({r.label for r in self.records if r.label is not None}))

    def subset(self, predicate) -> "EmbeddingSet":
        return EmbeddingSet(self.dim, [r for r in self.records if predicate(r)])

    def by_id(self, id: str) -> Embedding:
        for r in self.records:
            if r.id == id:
                return r
        raise KeyError(id)

    def matrix(self) -> np.ndarray:
        """Records stacked row-wise as float64, record order."""
        if not self.records:
            return np.zeros((0, self.dim))
        return np.stack([r.vector.astype(np.float64) for r in self.records])

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return self.dim == other.dim and self.records == other.records


_HEADER = struct.Struct("<4sHIQ")


def save_store(es: EmbeddingSet, path) -> None:
    """Write an EmbeddingSet in the ATPE container (all little-endian)."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, es.dim, len(es.records)))
        for r in es.records:
            id_bytes = r.id.encode("utf-8")
            label_bytes = (r.label or "").encode("utf-8")
            f.write(struct.pack("<B", _MODALITY_CODES[r.modality]))
            f.write(struct.pack("<H", len(id_bytes)))
            f.write(id_bytes)
            f.write(struct.pack("<H", len(label_bytes)))
            f.write(label_bytes)
            f.write(r.vector.astype("<f4").tobytes())


def load_store(path) -> EmbeddingSet:
    """Read an ATPE container. FormatError names the failing byte offset."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise FormatError("truncated header", 0)
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if dim < 1:
        raise FormatError(f"non-positive dim {dim}", 6)
    offset = _HEADER.size
    records = []
    for i in range(count):
        rec_start = offset
        if offset + 1 > len(data):
            raise FormatError(f"truncated record {i}", rec_start)
        (mod_code,) = struct.unpack_from("<B", data, offset)
        offset += 1
        if mod_code not in _MODALITY_NAMES:
            raise FormatError(f"unknown modality code {mod_code}", rec_start)
        id_str, offset = _read_string(data, offset, i)
        if not id_str:
            raise FormatError(f"empty id in record {i}", rec_start)
        label, offset = _read_string(data, offset, i)
        vec_bytes = dim * 4
        if offset + vec_bytes > len(data):
            raise FormatError(f"truncated vector in record {i}", offset)
        vector = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if not np.all(np.isfinite(vector)):
            raise FormatError(f"non-finite vector in record {i}", rec_start)
        # Embedding normalizes off-unit vectors itself (raw_norm kept).
        records.append(
            Embedding(
                id=id_str,
                modality=_MODALITY_NAMES[mod_code],
                vector=vector,
                label=label or None,
            )
        )
    if offset != len(data):
        raise FormatError("trailing bytes after last record", offset)
    return EmbeddingSet(dim, records)


def _read_string(data: bytes, offset: int, record_index: int):
    if offset + 2 > len(data):
        raise FormatError(f"truncated length field in record {record_index}", offset)
    (n,) = struct.unpack_from("<H", data, offset)
    offset += 2
    if offset + n > len(data):
        raise FormatError(f"truncated string in record {record_index}", offset)
    try:
        s = data[offset : offset + n].decode("utf-8")
    except UnicodeDecodeError:
        raise FormatError(f"invalid UTF-8 in record {record_index}", offset)
    return s, offset + n
