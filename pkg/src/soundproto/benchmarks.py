"""Frozen desk-scale benchmark constructions over the synthetic oracle.

These pin the configurations used as regression baselines: a contamination
benchmark (foreground/background mixtures against one known background
class) and a polyphony benchmark (equal-weight multi-class mixtures).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracle import (
    OracleConfig,
    gen_audio_embedding,
    gen_mixture_embedding,
    gen_text_embedding,
)
from .profiles import (
    Profile,
    background_profile_from_audio,
    background_profile_from_text,
    compute_profile,
)
from .prototypes import PrototypeSet, build_text_anchor
from .store import EmbeddingSet

# Mixtures at fg 0.7 / bg 0.3 need substantial cluster noise before the
# background draws predictions away from the foreground class.
CONTAMINATION_CONFIG = OracleConfig(
    n_classes=10, dim=64, noise_sigma=0.3, gap_magnitude=0.5, seed=7
)
GAP_CONFIG = OracleConfig(
    n_classes=10, dim=64, noise_sigma=0.1, gap_magnitude=0.5, seed=7
)

# Draw-index blocks keep labeled samples, background recordings, and test
# mixtures on disjoint noise streams.
DRAW_BASE_BG_RECORDINGS = 10_000
DRAW_BASE_MIXTURES = 20_000
DRAW_BASE_POLYPHONY = 30_000


def text_anchor_prototypes(cfg: OracleConfig) -> PrototypeSet:
    names = cfg.class_names()
    return PrototypeSet(
        [
            build_text_anchor(names[k], [gen_text_embedding(k, cfg)])
            for k in range(cfg.n_classes)
        ]
    )


def labeled_audio_pool(cfg: OracleConfig, per_class: int) -> EmbeddingSet:
    return EmbeddingSet(
        cfg.dim,
        [
            gen_audio_embedding(k, cfg, i)
            for k in range(cfg.n_classes)
            for i in range(per_class)
        ],
    )


@dataclass(frozen=True)
class ContaminationBenchmark:
    prototypes: PrototypeSet
    profiles: dict           # mixture id -> Profile
    truths: dict             # mixture id -> foreground class name
    background_class: str
    p_b_text: Profile
    p_b_audio: Profile


def contamination_benchmark(
    cfg: OracleConfig = CONTAMINATION_CONFIG,
    n_mixtures: int = 2000,
    background_class: int = 0,
    fg_weight: float = 0.7,
    bg_weight: float = 0.3,
    n_bg_recordings: int = 10,
    selection_seed: int = 123,
) -> ContaminationBenchmark:
    """Mixtures of a uniform foreground class (never the background class)
    over one fixed background class, plus both background-profile routes."""
    names = cfg.class_names()
    protos = text_anchor_prototypes(cfg)
    rng = np.random.default_rng(selection_seed)
    profiles = {}
    truths = {}
    others = [k for k in range(cfg.n_classes) if k != background_class]
    for i in range(n_mixtures):
        fg = int(others[rng.integers(len(others))])
        e = gen_mixture_embedding(
            [(fg, fg_weight), (background_class, bg_weight)],
            cfg,
            DRAW_BASE_MIXTURES + i,
        )
        profiles[e.id] = compute_profile(e, protos)
        truths[e.id] = names[fg]
    p_b_text = background_profile_from_text(
        [gen_text_embedding(background_class, cfg)], protos
    )
    bg_recordings = [
        gen_audio_embedding(background_class, cfg, DRAW_BASE_BG_RECORDINGS + j)
        for j in range(n_bg_recordings)
    ]
    p_b_audio = background_profile_from_audio(bg_recordings, protos)
    return ContaminationBenchmark(
        prototypes=protos,
        profiles=profiles,
        truths=truths,
        background_class=names[background_class],
        p_b_text=p_b_text,
        p_b_audio=p_b_audio,
    )


def polyphony_benchmark(
    cfg: OracleConfig = GAP_CONFIG,
    classes_per_audio: int = 1,
    count: int = 300,
    selection_seed: int = 42,
):
    """Equal-weight mixtures of classes_per_audio distinct classes.
    Returns (profiles by id, truth label sets by id, prototypes)."""
    names = cfg.class_names()
    protos = text_anchor_prototypes(cfg)
    rng = np.random.default_rng(selection_seed + classes_per_audio)
    profiles = {}
    truth_sets = {}
    for i in range(count):
        classes = sorted(
            int(c) for c in rng.choice(cfg.n_classes, classes_per_audio, replace=False)
        )
        e = gen_mixture_embedding(
            [(c, 1.0 / classes_per_audio) for c in classes],
            cfg,
            DRAW_BASE_POLYPHONY + i,
        )
        profiles[e.id] = compute_profile(e, protos)
        truth_sets[e.id] = {names[c] for c in classes}
    return profiles, truth_sets, protos
