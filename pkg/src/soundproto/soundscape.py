"""Deterministic soundscape synthesis: SNR-exact mixing, polyphonic mixtures,
and fixed-length chunk segmentation.

SNR is defined over RMS measured on the foreground's active window, with the
background left at reference level. Clipping is handled by attenuating the
whole mixture, never a single branch, so the requested SNR is preserved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from .errors import (
    AnnotationOutOfBounds,
    EmptySegment,
    EmptySet,
    ForegroundTooLong,
    InsufficientClasses,
    SampleRateMismatch,
    SilentBackground,
    SilentForeground,
)

MANIFEST_SCHEMA_VERSION = 1
DEFAULT_SNRS_DB = (6.0, 8.0, 10.0)
DEFAULT_CHUNK_S = 10.0


@dataclass(frozen=True)
class AudioClip:
    """Mono audio in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence (mono)")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        if self.sample_rate < 1:
            raise ValueError("sample_rate must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class SoundscapeSpec:
    """Declarative mixing recipe; rendering is a pure function of this."""

    foreground_ref: str
    background_ref: str
    snr_db: float
    onset_s: float = 0.0
    seed: int = 0
    environment: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.onset_s < 0:
            raise ValueError("onset_s must be >= 0")

    def to_dict(self) -> dict:
        d = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "foreground_ref": self.foreground_ref,
            "background_ref": self.background_ref,
            "snr_db": self.snr_db,
            "onset_s": self.onset_s,
            "seed": self.seed,
        }
        if self.environment is not None:
            d["environment"] = self.environment
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SoundscapeSpec":
        return cls(
            foreground_ref=d["foreground_ref"],
            background_ref=d["background_ref"],
            snr_db=float(d["snr_db"]),
            onset_s=float(d.get("onset_s", 0.0)),
            seed=int(d.get("seed", 0)),
            environment=d.get("environment"),
        )


@dataclass(frozen=True)
class MixResult:
    clip: AudioClip
    fg_gain: float
    safety_gain: float
    achieved_snr_db: float
    spec: SoundscapeSpec = field(compare=False, default=None)


def rms(clip: AudioClip, start_s: float = None, end_s: float = None) -> float:
    """Root-mean-square of a segment, float64 accumulation."""
    start = 0 if start_s is None else int(round(start_s * clip.sample_rate))
    end = clip.samples.size if end_s is None else int(round(end_s * clip.sample_rate))
    if start < 0 or end > clip.samples.size or start >= end:
        raise EmptySegment(f"segment [{start}, {end}) invalid for {clip.samples.size} samples")
    seg = clip.samples[start:end]
    return float(np.sqrt(np.mean(seg * seg)))


def mix_at_snr(fg: AudioClip, bg: AudioClip, spec: SoundscapeSpec) -> MixResult:
    """Scale fg into bg at spec.snr_db over the foreground's active window."""
    if fg.sample_rate != bg.sample_rate:
        raise SampleRateMismatch(f"fg {fg.sample_rate} Hz != bg {bg.sample_rate} Hz")
    onset = int(round(spec.onset_s * bg.sample_rate))
    if onset + fg.samples.size > bg.samples.size:
        raise ForegroundTooLong(
            f"foreground ({fg.samples.size} samples at onset {onset}) exceeds "
            f"background ({bg.samples.size} samples)"
        )
    fg_rms = rms(fg)
    if fg_rms < 1e-12:
        raise SilentForeground("foreground RMS is zero")
    window = (onset, onset + fg.samples.size)
    bg_rms = float(np.sqrt(np.mean(bg.samples[window[0]:window[1]] ** 2)))
    if bg_rms < 1e-12:
        raise SilentBackground("background RMS over the foreground window is zero")

    fg_gain = (10.0 ** (spec.snr_db / 20.0)) * bg_rms / fg_rms
    mixed = bg.samples.copy()
    mixed[window[0]:window[1]] += fg_gain * fg.samples
    peak = float(np.max(np.abs(mixed)))
    safety_gain = 1.0 if peak <= 1.0 else 1.0 / peak
    mixed *= safety_gain

    # Independent post-mix check from the scaled branches.
    scaled_fg_rms = float(np.sqrt(np.mean((safety_gain * fg_gain * fg.samples) ** 2)))
    scaled_bg_rms = safety_gain * bg_rms
    achieved = 20.0 * math.log10(scaled_fg_rms / scaled_bg_rms)
    return MixResult(
        clip=AudioClip(mixed, bg.sample_rate),
        fg_gain=fg_gain,
        safety_gain=safety_gain,
        achieved_snr_db=achieved,
        spec=spec,
    )


def generate_pairing_manifest(
    fg_clips: dict[str, AudioClip],
    bg_sets: dict[str, dict[str, AudioClip]],
    snrs_db=DEFAULT_SNRS_DB,
    seed: int = 0,
) -> list[SoundscapeSpec]:
    """One spec per (foreground, environment, snr): a random background sample
    and onset drawn from a seeded generator. Identical seed, identical output.
    """
    if not fg_clips or not bg_sets or any(not v for v in bg_sets.values()):
        raise EmptySet("foreground and every background environment must be non-empty")
    rng = np.random.default_rng(seed)
    specs = []
    for fg_id in sorted(fg_clips):
        fg = fg_clips[fg_id]
        for env in sorted(bg_sets):
            bg_ids = sorted(bg_sets[env])
            for snr in snrs_db:
                bg_id = bg_ids[int(rng.integers(len(bg_ids)))]
                bg = bg_sets[env][bg_id]
                slack = bg.duration_s - fg.duration_s
                if slack < 0:
                    raise ForegroundTooLong(
                        f"foreground {fg_id!r} longer than background {bg_id!r}"
                    )
                onset = float(rng.uniform(0.0, slack)) if slack > 0 else 0.0
                specs.append(
                    SoundscapeSpec(
                        foreground_ref=fg_id,
                        background_ref=bg_id,
                        snr_db=float(snr),
                        onset_s=onset,
                        seed=int(rng.integers(2**63)),
                        environment=env,
                    )
                )
    return specs


def generate_polyphonic(
    fg_clips: dict[str, tuple[str, AudioClip]],
    classes_per_audio: int,
    count: int = 1000,
    seed: int = 0,
    source_rms: float = 0.1,
):
    """Mixtures of clips from exactly classes_per_audio distinct classes at
    equal per-source RMS. Returns (manifest entries, rendered clips by id).
    """
    if classes_per_audio < 1:
        raise ValueError("classes_per_audio must be >= 1")
    by_class: dict[str, list[str]] = {}
    for clip_id in sorted(fg_clips):
        cls, _ = fg_clips[clip_id]
        by_class.setdefault(cls, []).append(clip_id)
    classes = sorted(by_class)
    if len(classes) < classes_per_audio:
        raise InsufficientClasses(
            f"{classes_per_audio} classes per audio requested, only {len(classes)} available"
        )
    rng = np.random.default_rng(seed)
    manifest = []
    rendered = {}
    for i in range(count):
        chosen_classes = sorted(
            rng.choice(classes, size=classes_per_audio, replace=False).tolist()
        )
        components = []
        parts = []
        rate = None
        for cls in chosen_classes:
            clip_id = by_class[cls][int(rng.integers(len(by_class[cls])))]
            _, clip = fg_clips[clip_id]
            if rate is None:
                rate = clip.sample_rate
            elif clip.sample_rate != rate:
                raise SampleRateMismatch("all foreground clips must share a sample rate")
            r = rms(clip)
            if r < 1e-12:
                raise SilentForeground(f"clip {clip_id!r} is silent")
            parts.append((clip_id, (source_rms / r) * clip.samples))
            components.append(clip_id)
        length = max(p.size for _, p in parts)
        mixed = np.zeros(length)
        for _, p in parts:
            mixed[: p.size] += p
        peak = float(np.max(np.abs(mixed)))
        safety = 1.0 if peak <= 1.0 else 1.0 / peak
        mix_id = f"poly-{classes_per_audio}-{i:05d}"
        rendered[mix_id] = AudioClip(safety * mixed, rate)
        manifest.append(
            {
                "schema_version": MANIFEST_SCHEMA_VERSION,
                "id": mix_id,
                "components": components,
                "labels": chosen_classes,
                "safety_gain": safety,
            }
        )
    return manifest, rendered


@dataclass(frozen=True)
class Chunk:
    clip: AudioClip
    start_s: float
    end_s: float
    labels: tuple[str, ...]

    @property
    def is_background(self) -> bool:
        return not self.labels


def segment_into_chunks(
    recording: AudioClip,
    annotations: list[tuple[str, float, float]],
    chunk_s: float = DEFAULT_CHUNK_S,
    min_overlap_s: float = 0.0,
) -> list[Chunk]:
    """Consecutive non-overlapping chunks; a chunk carries every class whose
    annotated span overlaps it by more than min_overlap_s. No labels means
    background. The final partial chunk is discarded.
    """
    duration = recording.duration_s
    for cls, start, end in annotations:
        if start < 0 or end > duration + 1e-9 or start >= end:
            raise AnnotationOutOfBounds(
                f"annotation {cls!r} [{start}, {end}] outside recording of {duration:.3f} s"
            )
    n_chunks = int(duration // chunk_s)
    samples_per_chunk = int(round(chunk_s * recording.sample_rate))
    chunks = []
    for i in range(n_chunks):
        c_start, c_end = i * chunk_s, (i + 1) * chunk_s
        labels = sorted(
            {
                cls
                for cls, s, e in annotations
                if min(e, c_end) - max(s, c_start) > min_overlap_s
            }
        )
        clip = AudioClip(
            recording.samples[i * samples_per_chunk : (i + 1) * samples_per_chunk],
            recording.sample_rate,
        )
        chunks.append(Chunk(clip, c_start, c_end, tuple(labels)))
    return chunks


def read_wav(path) -> AudioClip:
    """Read a mono RIFF WAV (16-bit PCM or 32-bit float). No resampling."""
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got {data.ndim} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}")
    return AudioClip(samples, int(rate))


def write_wav(path, clip: AudioClip, fmt: str = "float32") -> None:
    if fmt == "float32":
        wavfile.write(path, clip.sample_rate, clip.samples.astype(np.float32))
    elif fmt == "pcm16":
        scaled = np.clip(np.round(clip.samples * 32767.0), -32768, 32767)
        wavfile.write(path, clip.sample_rate, scaled.astype(np.int16))
    else:
        raise ValueError(f"unsupported format {fmt!r}")


def save_manifest(entries, path) -> None:
    """JSON lines, one entry per line."""
    with open(path, "w") as f:
        for e in entries:
            d = e.to_dict() if isinstance(e, SoundscapeSpec) else e
            f.write(json.dumps(d, sort_keys=True) + "\n")


def load_manifest(path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
