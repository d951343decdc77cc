"""Synthetic embedding generator: class-structured unit vectors with
controllable noise, a planted audio-to-text offset, and energy-weighted
mixtures. A desk-scale stand-in for a real embedding model; not a faithful
simulation of any real model's geometry.

Everything is a pure function of (config, indices): each draw derives its
own SeedSequence from (seed, stream tag, class, index).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimTooSmall, EmptyComponents
from .store import MODALITY_AUDIO, MODALITY_TEXT, Embedding, normalize

_STREAM_DIRECTIONS = 0
_STREAM_AUDIO = 1
_STREAM_GAP = 2
_STREAM_MIXTURE = 3


@dataclass(frozen=True)
class OracleConfig:
    n_classes: int
    dim: int
    noise_sigma: float = 0.1
    gap_magnitude: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if self.dim < self.n_classes:
            raise DimTooSmall(
                f"dim {self.dim} < n_classes {self.n_classes}: no room for "
                "orthogonal class directions"
            )
        if self.noise_sigma < 0 or self.gap_magnitude < 0:
            raise ValueError("noise_sigma and gap_magnitude must be >= 0")

    def class_names(self) -> tuple[str, ...]:
        # Zero-padded so lexicographic vocabulary order matches class index.
        width = len(str(self.n_classes - 1))
        return tuple(f"class{k:0{width}d}" for k in range(self.n_classes))


def _rng(cfg: OracleConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, *key]))


@lru_cache(maxsize=32)
def _directions(cfg: OracleConfig) -> np.ndarray:
    rng = _rng(cfg, _STREAM_DIRECTIONS)
    basis = rng.standard_normal((cfg.dim, cfg.n_classes))
    q, r = np.linalg.qr(basis)
    # Fix column signs so output is independent of QR sign convention.
    q = q * np.sign(np.diag(r))
    out = q.T[: cfg.n_classes].copy()
    out.setflags(write=False)
    return out


def gen_class_directions(cfg: OracleConfig) -> np.ndarray:
    """K orthonormal rows (Gram matrix = identity within 1e-9)."""
    return _directions(cfg)


def gap_vector(cfg: OracleConfig) -> np.ndarray:
    """The fixed audio-to-text offset shared by all classes."""
    if cfg.gap_magnitude == 0:
        return np.zeros(cfg.dim)
    rng = _rng(cfg, _STREAM_GAP)
    return cfg.gap_magnitude * normalize(rng.standard_normal(cfg.dim))


def gen_audio_embedding(class_k: int, cfg: OracleConfig, draw_index: int) -> Embedding:
    """Noisy unit vector around the class direction, labeled."""
    directions = gen_class_directions(cfg)
    rng = _rng(cfg, _STREAM_AUDIO, class_k, draw_index)
    noise = cfg.noise_sigma * rng.standard_normal(cfg.dim)
    vector = normalize(directions[class_k] + noise)
    return Embedding(
        id=f"audio-{class_k}-{draw_index}",
        modality=MODALITY_AUDIO,
        vector=vector.astype(np.float32),
        label=cfg.class_names()[class_k],
    )


def gen_text_embedding(class_k: int, cfg: OracleConfig, prompt_index: int = 0) -> Embedding:
    """Text-side vector: class direction plus the shared gap offset."""
    directions = gen_class_directions(cfg)
    vector = normalize(directions[class_k] + gap_vector(cfg))
    return Embedding(
        id=f"text-{class_k}-{prompt_index}",
        modality=MODALITY_TEXT,
        vector=vector.astype(np.float32),
        label=cfg.class_names()[class_k],
    )


def gen_mixture_embedding(
    components: list[tuple[int, float]], cfg: OracleConfig, draw_index: int
) -> Embedding:
    """Normalized weighted sum of per-component audio draws, unlabeled
    (ground truth travels in the manifest)."""
    if not components:
        raise EmptyComponents("mixture needs at least one component")
    for _, w in components:
        if w <= 0:
            raise ValueError("component weights must be > 0")
    acc = np.zeros(cfg.dim)
    for class_k, weight in components:
        e = gen_audio_embedding(class_k, cfg, draw_index)
        acc += weight * e.vector.astype(np.float64)
    key = "+".join(f"{k}x{w:g}" for k, w in components)
    return Embedding(
        id=f"mix-{key}-{draw_index}",
        modality=MODALITY_AUDIO,
        vector=normalize(acc).astype(np.float32),
        label=None,
    )
