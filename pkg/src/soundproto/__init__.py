"""Prototype-based zero-shot sound classification with background-profile
domain adaptation."""

from .store import (
    Embedding,
    EmbeddingSet,
    cosine_similarity,
    load_store,
    normalize,
    save_store,
)
from .prototypes import (
    Prototype,
    PrototypeSet,
    TgapConfig,
    build_supervised_centroid,
    build_text_anchor,
    build_tgap_prototype,
)
from .profiles import (
    AdaptationConfig,
    MultiLabelConfig,
    Profile,
    adapt,
    average_profiles,
    background_profile_from_audio,
    background_profile_from_text,
    classify,
    classify_multilabel,
    compute_profile,
)
from .soundscape import AudioClip, MixResult, SoundscapeSpec, mix_at_snr, rms
from .oracle import OracleConfig
from .estimator import PrototypeClassifier

__version__ = "0.1.0"

__all__ = [
    "AdaptationConfig",
    "AudioClip",
    "Embedding",
    "EmbeddingSet",
    "MixResult",
    "MultiLabelConfig",
    "OracleConfig",
    "Profile",
    "Prototype",
    "PrototypeClassifier",
    "PrototypeSet",
    "SoundscapeSpec",
    "TgapConfig",
    "adapt",
    "average_profiles",
    "background_profile_from_audio",
    "background_profile_from_text",
    "build_supervised_centroid",
    "build_text_anchor",
    "build_tgap_prototype",
    "classify",
    "classify_multilabel",
    "compute_profile",
    "cosine_similarity",
    "load_store",
    "mix_at_snr",
    "normalize",
    "rms",
    "save_store",
]
