"""Scikit-learn style estimator wrapping the prototype + profile pipeline,
so the classifier composes with sklearn model selection and pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .errors import ModalityError
from .profiles import (
    AdaptationConfig,
    MultiLabelConfig,
    Profile,
    adapt,
    average_profiles,
    classify,
    classify_multilabel,
    compute_profile,
)
from .prototypes import (
    PrototypeSet,
    TgapConfig,
    build_supervised_centroid,
    build_text_anchor,
    build_tgap_prototype,
)
from .store import MODALITY_AUDIO, MODALITY_TEXT, Embedding, EmbeddingSet


def _as_embedding_set(X, modality: str) -> EmbeddingSet:
    """Accept an EmbeddingSet, a list of Embedding, or a 2-D array."""
    if isinstance(X, EmbeddingSet):
        return X
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], Embedding):
        return EmbeddingSet.from_records(list(X))
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-D array or an EmbeddingSet")
    records = [
        Embedding(id=f"x{i}", modality=modality, vector=row.astype(np.float32))
        for i, row in enumerate(arr)
    ]
    return EmbeddingSet(arr.shape[1], records)


def _with_labels(es: EmbeddingSet, y) -> EmbeddingSet:
    if y is None:
        return es
    y = list(y)
    if len(y) != len(es):
        raise ValueError("y length must match X")
    records = [
        Embedding(id=r.id, modality=r.modality, vector=r.vector, label=str(label))
        for r, label in zip(es, y)
    ]
    return EmbeddingSet(es.dim, records)


class PrototypeClassifier(BaseEstimator, ClassifierMixin):
    """Nearest-prototype classifier over unit-norm embeddings with optional
    background-profile adaptation.

    Parameters
    ----------
    mode : 'text_anchor', 'tgap' or 'supervised'
        How fit() builds the per-class prototypes. 'text_anchor' averages
        labeled text prompts; 'tgap' retrieves the tgap_n unlabeled audio
        embeddings closest to each text anchor and uses their centroid;
        'supervised' averages labeled audio samples.
    tgap_n : neighbors retrieved per class in 'tgap' mode.
    tau : background subtraction strength in [0, 1]; 0 disables adaptation.
    background_source : 'text' or 'audio', recorded on adapted profiles.
    """

    def __init__(self, mode: str = "text_anchor", tgap_n: int = 32,
                 tau: float = 0.0, background_source: str = "text"):
        self.mode = mode
        self.tgap_n = tgap_n
        self.tau = tau
        self.background_source = background_source

    def fit(self, X, y=None, unlabeled_pool=None):
        """Build one prototype per class.

        X carries the anchor material (labeled text prompts for
        'text_anchor'/'tgap', labeled audio for 'supervised'); labels come
        from the embeddings or from y. 'tgap' additionally needs
        unlabeled_pool, an audio EmbeddingSet.
        """
        modality = MODALITY_AUDIO if self.mode == "supervised" else MODALITY_TEXT
        es = _with_labels(_as_embedding_set(X, modality), y)
        vocab = es.vocabulary
        if not vocab:
            raise ValueError("fit needs labeled embeddings (or y)")
        protos = []
        for cls in vocab:
            members = [r for r in es if r.label == cls]
            if self.mode == "text_anchor":
                protos.append(build_text_anchor(cls, members))
            elif self.mode == "supervised":
                protos.append(build_supervised_centroid(cls, es))
            elif self.mode == "tgap":
                if unlabeled_pool is None:
                    raise ValueError("mode 'tgap' requires unlabeled_pool")
                anchor = build_text_anchor(cls, members)
                protos.append(
                    build_tgap_prototype(
                        anchor, unlabeled_pool, TgapConfig(self.tgap_n)
                    )
                )
            else:
                raise ValueError(f"unknown mode {self.mode!r}")
        self.prototypes_ = PrototypeSet(protos)
        self.classes_ = np.asarray(self.prototypes_.class_ids)
        self.background_profile_ = None
        return self

    def set_background(self, background) -> "PrototypeClassifier":
        """Attach a background profile: a Profile, or embeddings whose
        average profile describes the background."""
        check_is_fitted(self, "prototypes_")
        if isinstance(background, Profile):
            if background.class_ids != self.prototypes_.class_ids:
                raise ValueError("background profile vocabulary mismatch")
            self.background_profile_ = background
        else:
            es = _as_embedding_set(
                background,
                MODALITY_TEXT if self.background_source == "text" else MODALITY_AUDIO,
            )
            expected = (
                MODALITY_TEXT if self.background_source == "text" else MODALITY_AUDIO
            )
            for r in es:
                if r.modality != expected:
                    raise ModalityError(
                        f"background embedding {r.id!r} is {r.modality}, "
                        f"expected {expected}"
                    )
            self.background_profile_ = average_profiles(
                [compute_profile(r, self.prototypes_) for r in es]
            )
        return self

    def _profiles(self, X) -> list[Profile]:
        check_is_fitted(self, "prototypes_")
        es = _as_embedding_set(X, MODALITY_AUDIO)
        profiles = [compute_profile(r, self.prototypes_) for r in es]
        if self.tau > 0 and self.background_profile_ is not None:
            cfg = AdaptationConfig(self.tau, self.background_source)
            profiles = [adapt(p, self.background_profile_, cfg) for p in profiles]
        return profiles

    def decision_function(self, X) -> np.ndarray:
        """Per-sample (adapted) similarity scores, column order = classes_."""
        return np.stack([p.scores for p in self._profiles(X)])

    def predict(self, X) -> np.ndarray:
        return np.asarray([classify(p) for p in self._profiles(X)])

    def predict_multilabel(self, X, threshold: float = 0.5) -> list[set]:
        cfg = MultiLabelConfig(threshold)
        return [classify_multilabel(p, cfg) for p in self._profiles(X)]
