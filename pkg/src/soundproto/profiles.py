"""Similarity profiles, background profiles, and the tau-weighted adaptation.

A profile is the vector of cosine similarities between one embedding and
every class prototype. Adaptation subtracts a scaled background profile:
final = test - tau * background. Adapted scores are deliberately left
unclamped; argmax and thresholding operate on raw values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatch,
    EmptyInput,
    EmptyProfile,
    ModalityError,
    TauOutOfRange,
    VocabularyMismatch,
)
from .prototypes import PrototypeSet
from .store import MODALITY_AUDIO, MODALITY_TEXT, Embedding, cosine_similarity

BACKGROUND_SOURCE_TEXT = "text"
BACKGROUND_SOURCE_AUDIO = "audio"

# Grid-searched optima; text route needs a light touch, audio a heavy one.
DEFAULT_TAU = {BACKGROUND_SOURCE_TEXT: 0.2, BACKGROUND_SOURCE_AUDIO: 0.7}
DEFAULT_MULTILABEL_THRESHOLD = 0.5

BACKGROUND_PROMPT_TEMPLATES = (
    "This is a sound of {BG}",
    "{BG} sounds in the background",
    "This is a sound of {BG} in the background",
)


@dataclass(frozen=True)
class Profile:
    """Scores over the class vocabulary, in vocabulary order."""

    class_ids: tuple[str, ...]
    scores: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "class_ids", tuple(self.class_ids))
        s = np.asarray(self.scores, dtype=np.float64)
        if s.shape != (len(self.class_ids),):
            raise ValueError("scores length must match class_ids")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    def to_dict(self) -> dict:
        return {
            "class_ids": list(self.class_ids),
            "scores": [float(x) for x in self.scores],
            "meta": dict(self.meta),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        return cls(tuple(d["class_ids"]), np.asarray(d["scores"], dtype=np.float64),
                   d.get("meta", {}))


@dataclass(frozen=True)
class AdaptationConfig:
    tau: float
    background_source: str = BACKGROUND_SOURCE_TEXT

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise TauOutOfRange(f"tau {self.tau} outside [0, 1]")
        if self.background_source not in (BACKGROUND_SOURCE_TEXT, BACKGROUND_SOURCE_AUDIO):
            raise ValueError(f"unknown background source {self.background_source!r}")


@dataclass(frozen=True)
class MultiLabelConfig:
    threshold: float = DEFAULT_MULTILABEL_THRESHOLD

    def __post_init__(self):
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [-1, 1]")


def compute_profile(e: Embedding, protos: PrototypeSet) -> Profile:
    """Cosine similarity of e against every prototype, vocabulary order."""
    if e.dim != protos.dim:
        raise DimMismatch(f"embedding dim {e.dim} != prototype dim {protos.dim}")
    scores = np.array([cosine_similarity(e, p) for p in protos], dtype=np.float64)
    return Profile(protos.class_ids, scores, {"source_id": e.id})


def average_profiles(profiles: list[Profile]) -> Profile:
    """Elementwise arithmetic mean of profiles sharing a vocabulary."""
    profiles = list(profiles)
    if not profiles:
        raise EmptyInput("no profiles to average")
    class_ids = profiles[0].class_ids
    for p in profiles[1:]:
        if p.class_ids != class_ids:
            raise VocabularyMismatch("profiles computed over different vocabularies")
    mean = np.mean(np.stack([p.scores for p in profiles]), axis=0)
    return Profile(class_ids, mean, {"n_averaged": len(profiles)})


def background_profile_from_text(prompt_embeddings: list[Embedding],
                                 protos: PrototypeSet) -> Profile:
    """Average profile of the background-describing text prompts."""
    prompts = list(prompt_embeddings)
    if not prompts:
        raise EmptyInput("no background prompt embeddings")
    for p in prompts:
        if p.modality != MODALITY_TEXT:
            raise ModalityError(f"prompt {p.id!r} is {p.modality}, expected text")
    out = average_profiles([compute_profile(p, protos) for p in prompts])
    return Profile(out.class_ids, out.scores,
                   {"background_source": BACKGROUND_SOURCE_TEXT,
                    "n_prompts": len(prompts)})


def background_profile_from_audio(bg_embeddings: list[Embedding],
                                  protos: PrototypeSet) -> Profile:
    """Average profile of actual background recordings."""
    recs = list(bg_embeddings)
    if not recs:
        raise EmptyInput("no background audio embeddings")
    for r in recs:
        if r.modality != MODALITY_AUDIO:
            raise ModalityError(f"recording {r.id!r} is {r.modality}, expected audio")
    out = average_profiles([compute_profile(r, protos) for r in recs])
    return Profile(out.class_ids, out.scores,
                   {"background_source": BACKGROUND_SOURCE_AUDIO,
                    "n_recordings": len(recs)})


def adapt(p_s: Profile, p_b: Profile, cfg: AdaptationConfig) -> Profile:
    """Subtract the scaled background profile: scores_s - tau * scores_b."""
    if p_s.class_ids != p_b.class_ids:
        raise VocabularyMismatch("test and background profiles disagree on vocabulary")
    scores = p_s.scores - cfg.tau * p_b.scores
    meta = dict(p_s.meta)
    meta.update({"tau": cfg.tau, "background_source": cfg.background_source})
    return Profile(p_s.class_ids, scores, meta)


def classify(p: Profile) -> str:
    """Argmax class; ties break toward the lowest vocabulary index."""
    if len(p.class_ids) < 1:
        raise EmptyProfile("profile has no classes")
    return p.class_ids[int(np.argmax(p.scores))]


def classify_multilabel(p: Profile, cfg: MultiLabelConfig) -> set[str]:
    """All classes scoring at or above the threshold; may be empty."""
    if len(p.class_ids) < 1:
        raise EmptyProfile("profile has no classes")
    return {c for c, s in zip(p.class_ids, p.scores) if s >= cfg.threshold}
