"""Class prototype construction: text anchors, TGAP retrieval, labeled centroids.

All three builders are pure and deterministic; a centroid is the arithmetic
mean of its members renormalized to the unit sphere, which keeps cosine
geometry consistent with unit-norm stores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatch,
    EmptyPromptSet,
    ModalityError,
    NoSamplesForClass,
    PoolTooSmall,
)
from .store import (
    MODALITY_AUDIO,
    MODALITY_TEXT,
    Embedding,
    EmbeddingSet,
    load_store,
    normalize,
    save_store,
)

PROVENANCE_TEXT_ANCHOR = "text_anchor"
PROVENANCE_TGAP = "tgap"
PROVENANCE_SUPERVISED = "supervised_centroid"
PROVENANCES = (PROVENANCE_TEXT_ANCHOR, PROVENANCE_TGAP, PROVENANCE_SUPERVISED)

DEFAULT_CLASS_PROMPT_TEMPLATE = "This is a sound of {LABEL}"
DEFAULT_TGAP_N = 32


@dataclass(frozen=True)
class Prototype:
    """Class-identified unit vector with provenance."""

    class_id: str
    vector: np.ndarray
    provenance: str
    support_count: int

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.support_count < 1:
            raise ValueError("support_count must be >= 1")
        v = np.asarray(self.vector, dtype=np.float64)
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"prototype vector norm {norm} not unit")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return int(self.vector.size)


@dataclass(frozen=True)
class TgapConfig:
    n_neighbors: int = DEFAULT_TGAP_N

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")


class PrototypeSet:
    """One prototype per vocabulary class, in vocabulary order."""

    def __init__(self, prototypes: list[Prototype]):
        prototypes = list(prototypes)
        if not prototypes:
            raise ValueError("prototype set must be non-empty")
        dim = prototypes[0].dim
        classes = [p.class_id for p in prototypes]
        if len(set(classes)) != len(classes):
            raise ValueError("duplicate class_id in prototype set")
        if classes != sorted(classes):
            prototypes = sorted(prototypes, key=lambda p: p.class_id)
        for p in prototypes:
            if p.dim != dim:
                raise DimMismatch(f"prototype {p.class_id!r} dim {p.dim} != {dim}")
        self.prototypes = tuple(prototypes)
        self.dim = dim

    @property
    def class_ids(self) -> tuple[str, ...]:
        return tuple(p.class_id for p in self.prototypes)

    def matrix(self) -> np.ndarray:
        return np.stack([p.vector for p in self.prototypes])

    def __len__(self):
        return len(self.prototypes)

    def __iter__(self):
        return iter(self.prototypes)

    def __getitem__(self, class_id: str) -> Prototype:
        for p in self.prototypes:
            if p.class_id == class_id:
                return p
        raise KeyError(class_id)


def _renormalized_mean(vectors: list[np.ndarray]) -> np.ndarray:
    mean = np.mean(np.stack([np.asarray(v, dtype=np.float64) for v in vectors]), axis=0)
    return normalize(mean)


def build_text_anchor(class_id: str, prompt_embeddings: list[Embedding]) -> Prototype:
    """Renormalized mean of the class's prompt embeddings."""
    prompts = list(prompt_embeddings)
    if not prompts:
        raise EmptyPromptSet(f"no prompt embeddings for class {class_id!r}")
    for p in prompts:
        if p.modality != MODALITY_TEXT:
            raise ModalityError(f"prompt {p.id!r} is {p.modality}, expected text")
    return Prototype(
        class_id=class_id,
        vector=_renormalized_mean([p.vector for p in prompts]),
        provenance=PROVENANCE_TEXT_ANCHOR,
        support_count=len(prompts),
    )


def build_tgap_prototype(anchor, pool: EmbeddingSet, cfg: TgapConfig,
                         class_id: str | None = None) -> Prototype:
    """Centroid of the N pool embeddings most similar to the anchor.

    Fully unsupervised: pool labels, if any, are ignored. Ties in similarity
    break by ascending record index.
    """
    n = cfg.n_neighbors
    if n > len(pool):
        raise PoolTooSmall(f"n_neighbors {n} > pool size {len(pool)}")
    for r in pool:
        if r.modality != MODALITY_AUDIO:
            raise ModalityError(f"pool record {r.id!r} is {r.modality}, expected audio")
    if anchor.dim != pool.dim:
        raise DimMismatch(f"anchor dim {anchor.dim} != pool dim {pool.dim}")
    anchor_vec = np.asarray(anchor.vector, dtype=np.float64)
    sims = pool.matrix() @ anchor_vec
    # Stable sort on -sims: equal similarities keep ascending record index.
    order = np.argsort(-sims, kind="stable")[:n]
    chosen = [pool.records[i].vector for i in sorted(order)]
    if class_id is None:
        class_id = getattr(anchor, "class_id", None) or getattr(anchor, "label", None)
    if class_id is None:
        raise ValueError("class_id required when the anchor carries no class")
    return Prototype(
        class_id=class_id,
        vector=_renormalized_mean(chosen),
        provenance=PROVENANCE_TGAP,
        support_count=n,
    )


def build_supervised_centroid(class_id: str, labeled: EmbeddingSet) -> Prototype:
    """Renormalized mean of all audio embeddings labeled class_id."""
    members = [
        r for r in labeled
        if r.label == class_id and r.modality == MODALITY_AUDIO
    ]
    if not members:
        raise NoSamplesForClass(f"no labeled audio samples for class {class_id!r}")
    return Prototype(
        class_id=class_id,
        vector=_renormalized_mean([m.vector for m in members]),
        provenance=PROVENANCE_SUPERVISED,
        support_count=len(members),
    )


def save_prototype_set(ps: PrototypeSet, path) -> None:
    """Serialize in the ATPE container plus a JSON sidecar (.json appended)."""
    records = [
        Embedding(
            id=f"proto:{p.class_id}",
            modality=MODALITY_TEXT if p.provenance == PROVENANCE_TEXT_ANCHOR else MODALITY_AUDIO,
            vector=p.vector.astype(np.float32),
            label=p.class_id,
        )
        for p in ps
    ]
    save_store(EmbeddingSet(ps.dim, records), path)
    sidecar = {
        "prototypes": [
            {"class_id": p.class_id, "provenance": p.provenance,
             "support_count": p.support_count}
            for p in ps
        ]
    }
    with open(str(path) + ".json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)


def load_prototype_set(path) -> PrototypeSet:
    es = load_store(path)
    with open(str(path) + ".json") as f:
        sidecar = json.load(f)
    meta = {m["class_id"]: m for m in sidecar["prototypes"]}
    protos = []
    for r in es:
        m = meta[r.label]
        protos.append(
            Prototype(
                class_id=r.label,
                vector=r.vector.astype(np.float64),
                provenance=m["provenance"],
                support_count=m["support_count"],
            )
        )
    return PrototypeSet(protos)
