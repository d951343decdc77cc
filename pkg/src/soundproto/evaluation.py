"""Scoring, confusion analysis, tau grid search, SNR sweeps, and modality-gap
statistics. Reports are canonical JSON (sorted keys); plot data is CSV.
"""

from __future__ import annotations

import io
import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatch,
    EmptyGrid,
    IdMismatch,
    MissingProvenance,
    UnknownClass,
)
from .profiles import AdaptationConfig, Profile, adapt, classify
from .prototypes import PROVENANCES, PrototypeSet
from .store import EmbeddingSet

TAU_GRID_DEFAULT = tuple(round(0.1 * i, 1) for i in range(11))

# Pairwise-distance computations switch to a seeded subsample above this.
GAP_SUBSAMPLE_LIMIT = 2000
PROBE_EPOCHS = 100


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    per_class_accuracy: dict
    confusion: np.ndarray
    vocabulary: tuple[str, ...]
    mean_pred_classes_per_audio: float
    n_samples: int
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class_accuracy": dict(sorted(self.per_class_accuracy.items())),
            "confusion": self.confusion.tolist(),
            "vocabulary": list(self.vocabulary),
            "mean_pred_classes_per_audio": self.mean_pred_classes_per_audio,
            "n_samples": self.n_samples,
            "meta": dict(self.meta),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class TauSearchResult:
    grid: tuple[float, ...]
    accuracy_per_tau: tuple[float, ...]
    best_tau: float
    best_accuracy: float

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "accuracy_per_tau": list(self.accuracy_per_tau),
            "best_tau": self.best_tau,
            "best_accuracy": self.best_accuracy,
        }


@dataclass(frozen=True)
class GapReport:
    mean_intra_audio: float | None
    mean_intra_text: float | None
    mean_inter: float
    separable: bool
    per_class_prototype_distance: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "mean_intra_audio": self.mean_intra_audio,
            "mean_intra_text": self.mean_intra_text,
            "mean_inter": self.mean_inter,
            "separable": self.separable,
            "per_class_prototype_distance": {
                f"{cls}|{prov}": d
                for (cls, prov), d in sorted(self.per_class_prototype_distance.items())
            },
            "meta": dict(self.meta),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _check_ids(predictions: dict, truths: dict):
    if set(predictions) != set(truths):
        missing = set(truths) ^ set(predictions)
        raise IdMismatch(f"prediction/truth id sets differ on {sorted(missing)[:5]}")


def evaluate(predictions: dict, truths: dict, vocabulary) -> EvaluationReport:
    """Accuracy and K x K confusion matrix (rows true, columns predicted)."""
    _check_ids(predictions, truths)
    vocab = tuple(vocabulary)
    index = {c: i for i, c in enumerate(vocab)}
    confusion = np.zeros((len(vocab), len(vocab)), dtype=np.int64)
    for sample_id in sorted(truths):
        t, p = truths[sample_id], predictions[sample_id]
        if t not in index:
            raise UnknownClass(f"true class {t!r} not in vocabulary")
        if p not in index:
            raise UnknownClass(f"predicted class {p!r} not in vocabulary")
        confusion[index[t], index[p]] += 1
    n = int(confusion.sum())
    accuracy = float(np.trace(confusion) / n) if n else 0.0
    per_class = {
        vocab[i]: float(confusion[i, i] / row_sum)
        for i, row_sum in enumerate(confusion.sum(axis=1))
        if row_sum > 0
    }
    return EvaluationReport(
        accuracy=accuracy,
        per_class_accuracy=per_class,
        confusion=confusion,
        vocabulary=vocab,
        mean_pred_classes_per_audio=1.0 if n else 0.0,
        n_samples=n,
    )


def evaluate_multilabel(pred_sets: dict, truth_sets: dict, vocabulary,
                        metric: str = "exact") -> EvaluationReport:
    """Multi-label scoring. 'exact' counts a sample correct iff the predicted
    set equals the truth set; 'jaccard' averages intersection-over-union.
    Also reports the mean predicted set size (Pred. C/A).
    """
    _check_ids(pred_sets, truth_sets)
    vocab = tuple(vocabulary)
    known = set(vocab)
    scores = []
    sizes = []
    for sample_id in sorted(truth_sets):
        truth = set(truth_sets[sample_id])
        pred = set(pred_sets[sample_id])
        for c in truth | pred:
            if c not in known:
                raise UnknownClass(f"class {c!r} not in vocabulary")
        sizes.append(len(pred))
        if metric == "exact":
            scores.append(1.0 if pred == truth else 0.0)
        elif metric == "jaccard":
            union = truth | pred
            scores.append(len(truth & pred) / len(union) if union else 1.0)
        else:
            raise ValueError(f"unknown metric {metric!r}")
    n = len(scores)
    return EvaluationReport(
        accuracy=float(np.mean(scores)) if n else 0.0,
        per_class_accuracy={},
        confusion=np.zeros((len(vocab), len(vocab)), dtype=np.int64),
        vocabulary=vocab,
        mean_pred_classes_per_audio=float(np.mean(sizes)) if n else 0.0,
        n_samples=n,
        meta={"metric": metric},
    )


def top_confusions(report: EvaluationReport, true_class: str, k: int = 3):
    """Most frequent wrong predictions for a class, descending count,
    ties by vocabulary order."""
    if true_class not in report.vocabulary:
        raise UnknownClass(f"class {true_class!r} not in vocabulary")
    row_index = report.vocabulary.index(true_class)
    row = report.confusion[row_index]
    entries = [
        (cls, int(count))
        for i, (cls, count) in enumerate(zip(report.vocabulary, row))
        if i != row_index and count > 0
    ]
    entries.sort(key=lambda e: (-e[1], report.vocabulary.index(e[0])))
    return entries[:k]


def grid_search_tau(test_profiles: dict, p_b: Profile, truths: dict,
                    grid=TAU_GRID_DEFAULT,
                    background_source: str = "text") -> TauSearchResult:
    """Accuracy at every tau in the grid; best_tau is the argmax, smallest
    tau on ties."""
    grid = tuple(grid)
    if not grid:
        raise EmptyGrid("tau grid is empty")
    _check_ids(test_profiles, truths)
    vocab = p_b.class_ids
    accuracies = []
    for tau in grid:
        cfg = AdaptationConfig(tau=tau, background_source=background_source)
        predictions = {
            sample_id: classify(adapt(profile, p_b, cfg))
            for sample_id, profile in test_profiles.items()
        }
        accuracies.append(evaluate(predictions, truths, vocab).accuracy)
    best_index = 0
    for i, acc in enumerate(accuracies):
        if acc > accuracies[best_index]:
            best_index = i
    return TauSearchResult(
        grid=grid,
        accuracy_per_tau=tuple(accuracies),
        best_tau=grid[best_index],
        best_accuracy=accuracies[best_index],
    )


def snr_sweep(cases: dict, backgrounds: dict, taus: dict, vocabulary) -> list[dict]:
    """Accuracy per (snr, mode) cell.

    cases: snr_db -> (profiles by id, truths by id).
    backgrounds: mode ('text'/'audio') -> background Profile.
    taus: mode -> tau. Baseline is always included.
    """
    rows = []
    for snr in sorted(cases):
        profiles, truths = cases[snr]
        modes = {"baseline": None}
        for mode in sorted(backgrounds):
            modes[mode] = backgrounds[mode]
        for mode, p_b in modes.items():
            if p_b is None:
                predictions = {i: classify(p) for i, p in profiles.items()}
            else:
                cfg = AdaptationConfig(tau=taus[mode], background_source=mode)
                predictions = {
                    i: classify(adapt(p, p_b, cfg)) for i, p in profiles.items()
                }
            acc = evaluate(predictions, truths, vocabulary).accuracy
            rows.append({"snr_db": snr, "mode": mode, "accuracy": acc})
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["snr_db", "mode", "accuracy"])
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _mean_pairwise_distance(m: np.ndarray) -> float | None:
    if m.shape[0] < 2:
        return None
    sims = np.clip(m @ m.T, -1.0, 1.0)
    upper = sims[np.triu_indices(m.shape[0], k=1)]
    return float(np.mean(1.0 - upper))


def _mean_cross_distance(a: np.ndarray, b: np.ndarray) -> float:
    sims = np.clip(a @ b.T, -1.0, 1.0)
    return float(np.mean(1.0 - sims))


def _perceptron_separable(x: np.ndarray, y: np.ndarray, seed: int) -> bool:
    """Plain perceptron; separable iff an epoch finishes with zero updates
    within the epoch budget."""
    rng = np.random.default_rng(seed)
    w = np.zeros(x.shape[1])
    b = 0.0
    order = np.arange(x.shape[0])
    for _ in range(PROBE_EPOCHS):
        rng.shuffle(order)
        mistakes = 0
        for i in order:
            pred = 1.0 if x[i] @ w + b > 0 else -1.0
            if pred != y[i]:
                w += y[i] * x[i]
                b += y[i]
                mistakes += 1
        if mistakes == 0:
            return True
    return False


def modality_gap_stats(audio: EmbeddingSet, text: EmbeddingSet,
                       seed: int = 0) -> GapReport:
    """Mean pairwise cosine distances within and across modalities, plus a
    perceptron probe for linear separability."""
    if audio.dim != text.dim:
        raise DimMismatch(f"audio dim {audio.dim} != text dim {text.dim}")
    if not len(audio) or not len(text):
        raise ValueError("both sets must be non-empty")
    rng = np.random.default_rng(seed)
    meta = {"seed": seed}

    def sample_matrix(es, name):
        m = es.matrix()
        if m.shape[0] > GAP_SUBSAMPLE_LIMIT:
            idx = np.sort(rng.choice(m.shape[0], GAP_SUBSAMPLE_LIMIT, replace=False))
            m = m[idx]
            meta[f"subsample_{name}"] = GAP_SUBSAMPLE_LIMIT
        return m

    am = sample_matrix(audio, "audio")
    tm = sample_matrix(text, "text")
    x = np.vstack([am, tm])
    y = np.concatenate([np.full(am.shape[0], -1.0), np.full(tm.shape[0], 1.0)])
    return GapReport(
        mean_intra_audio=_mean_pairwise_distance(am),
        mean_intra_text=_mean_pairwise_distance(tm),
        mean_inter=_mean_cross_distance(am, tm),
        separable=_perceptron_separable(x, y, seed),
        meta=meta,
    )


def prototype_distance_analysis(protos_by_provenance: dict,
                                labeled_audio: EmbeddingSet) -> GapReport:
    """Per (class, provenance): mean cosine distance from prototype to the
    class's audio samples. Requires all three provenances over one vocabulary.
    Classes without audio samples are omitted, not reported as zero."""
    for prov in PROVENANCES:
        if prov not in protos_by_provenance:
            raise MissingProvenance(f"no prototype set for provenance {prov!r}")
    vocab = None
    for prov, ps in protos_by_provenance.items():
        if vocab is None:
            vocab = ps.class_ids
        elif ps.class_ids != vocab:
            raise MissingProvenance("prototype sets disagree on vocabulary")
    distances = {}
    for cls in vocab:
        members = [
            r.vector.astype(np.float64)
            for r in labeled_audio
            if r.label == cls and r.modality == "audio"
        ]
        if not members:
            continue
        m = np.stack(members)
        for prov, ps in protos_by_provenance.items():
            sims = np.clip(m @ ps[cls].vector, -1.0, 1.0)
            distances[(cls, prov)] = float(np.mean(1.0 - sims))
    return GapReport(
        mean_intra_audio=None,
        mean_intra_text=None,
        mean_inter=0.0,
        separable=False,
        per_class_prototype_distance=distances,
        meta={"analysis": "prototype_distance"},
    )


def prototype_distances_to_csv(report: GapReport) -> str:
    """Grouped-bar plot data: class, provenance, mean cosine distance."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["class", "provenance", "mean_cosine_distance"])
    for (cls, prov), d in sorted(report.per_class_prototype_distance.items()):
        writer.writerow([cls, prov, d])
    return buf.getvalue()
