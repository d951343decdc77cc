"""Declarative experiment configuration: one JSON document binds stores,
prototype mode, background source, tau, thresholds, and seeds. Unknown keys
are rejected so a config file can never silently drift.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

from .errors import ConfigError
from .profiles import DEFAULT_TAU

CONFIG_SCHEMA_VERSION = 1

PROTOTYPE_MODES = ("text_anchor", "tgap", "supervised")
BACKGROUND_MODES = ("none", "text", "audio")

_KNOWN_KEYS = {
    "schema_version",
    "audio_store_path",
    "text_store_path",
    "unlabeled_pool_path",
    "prototype_mode",
    "tgap_n",
    "background_mode",
    "background_prompts",
    "background_store_path",
    "tau",
    "multilabel_threshold",
    "seed",
    "output_dir",
}

_PATH_KEYS = (
    "audio_store_path",
    "text_store_path",
    "unlabeled_pool_path",
    "background_store_path",
)


@dataclass(frozen=True)
class ExperimentConfig:
    audio_store_path: str
    text_store_path: str
    prototype_mode: str
    background_mode: str
    tau: float
    seed: int
    output_dir: str
    schema_version: int = CONFIG_SCHEMA_VERSION
    unlabeled_pool_path: str | None = None
    tgap_n: int | None = None
    background_prompts: tuple[str, ...] | None = None
    background_store_path: str | None = None
    multilabel_threshold: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["background_prompts"] is not None:
            d["background_prompts"] = list(d["background_prompts"])
        return {k: v for k, v in d.items() if v is not None}


def validate(document: dict, check_paths: bool = True) -> ExperimentConfig:
    """Normalize and cross-check a config document. Every violated invariant
    is reported at once via ConfigError.errors."""
    if isinstance(document, ExperimentConfig):
        document = document.to_dict()
    errors = []
    unknown = sorted(set(document) - _KNOWN_KEYS)
    if unknown:
        errors.append(f"unknown keys: {', '.join(unknown)}")
    version = document.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        errors.append(f"unsupported schema_version {version}")

    for key in ("audio_store_path", "text_store_path", "output_dir"):
        if not document.get(key):
            errors.append(f"{key} is required")

    prototype_mode = document.get("prototype_mode", "text_anchor")
    if prototype_mode not in PROTOTYPE_MODES:
        errors.append(f"prototype_mode must be one of {PROTOTYPE_MODES}")
    tgap_n = document.get("tgap_n")
    if prototype_mode == "tgap":
        if tgap_n is None:
            errors.append("tgap_n is required when prototype_mode is 'tgap'")
        elif not isinstance(tgap_n, int) or tgap_n < 1:
            errors.append("tgap_n must be a positive integer")
        if not document.get("unlabeled_pool_path"):
            errors.append("unlabeled_pool_path is required when prototype_mode is 'tgap'")
    elif tgap_n is not None:
        errors.append("tgap_n only applies when prototype_mode is 'tgap'")

    background_mode = document.get("background_mode", "none")
    if background_mode not in BACKGROUND_MODES:
        errors.append(f"background_mode must be one of {BACKGROUND_MODES}")
    prompts = document.get("background_prompts")
    bg_store = document.get("background_store_path")
    if background_mode == "none":
        if prompts is not None:
            errors.append("background_prompts given but background_mode is 'none'")
        if bg_store is not None:
            errors.append("background_store_path given but background_mode is 'none'")
    elif background_mode == "text":
        if prompts is None and bg_store is None:
            errors.append(
                "background_mode 'text' needs background_prompts or background_store_path"
            )
    elif background_mode == "audio":
        if bg_store is None:
            errors.append("background_mode 'audio' needs background_store_path")
        if prompts is not None:
            errors.append("background_prompts only apply to background_mode 'text'")

    tau = document.get("tau")
    if tau is None:
        tau = DEFAULT_TAU.get(background_mode, 0.0)
    elif not isinstance(tau, (int, float)) or not 0.0 <= tau <= 1.0:
        errors.append(f"tau {tau!r} outside [0, 1]")

    threshold = document.get("multilabel_threshold")
    if threshold is not None and (
        not isinstance(threshold, (int, float)) or not -1.0 <= threshold <= 1.0
    ):
        errors.append(f"multilabel_threshold {threshold!r} outside [-1, 1]")

    seed = document.get("seed", 0)
    if not isinstance(seed, int):
        errors.append("seed must be an integer")

    if check_paths:
        for key in _PATH_KEYS:
            path = document.get(key)
            if path and not os.path.exists(path):
                errors.append(f"{key}: no such file {path!r}")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        schema_version=CONFIG_SCHEMA_VERSION,
        audio_store_path=document["audio_store_path"],
        text_store_path=document["text_store_path"],
        unlabeled_pool_path=document.get("unlabeled_pool_path"),
        prototype_mode=prototype_mode,
        tgap_n=tgap_n,
        background_mode=background_mode,
        background_prompts=tuple(prompts) if prompts is not None else None,
        background_store_path=bg_store,
        tau=float(tau),
        multilabel_threshold=(
            float(threshold) if threshold is not None else None
        ),
        seed=seed,
        output_dir=document["output_dir"],
    )


def load_config(path, overrides: dict | None = None,
                check_paths: bool = True) -> ExperimentConfig:
    with open(path) as f:
        document = json.load(f)
    if overrides:
        document.update({k: v for k, v in overrides.items() if v is not None})
    return validate(document, check_paths=check_paths)


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
