import numpy as np
import pytest

from soundproto import EmbeddingSet, Profile
from soundproto.benchmarks import (
    GAP_CONFIG,
    contamination_benchmark,
    labeled_audio_pool,
    polyphony_benchmark,
    text_anchor_prototypes,
)
from soundproto.errors import (
    EmptyGrid,
    IdMismatch,
    MissingProvenance,
    UnknownClass,
)
from soundproto.evaluation import (
    evaluate,
    evaluate_multilabel,
    grid_search_tau,
    modality_gap_stats,
    prototype_distance_analysis,
    prototype_distances_to_csv,
    snr_sweep,
    sweep_to_csv,
    top_confusions,
)
from soundproto.oracle import gen_audio_embedding, gen_text_embedding
from soundproto.profiles import MultiLabelConfig, classify_multilabel, compute_profile
from soundproto.prototypes import (
    PrototypeSet,
    TgapConfig,
    build_supervised_centroid,
    build_text_anchor,
    build_tgap_prototype,
)

VOCAB = ("a", "b", "c")


class TestEvaluate:
    def test_perfect_predictions(self):
        truths = {"1": "a", "2": "b", "3": "c"}
        report = evaluate(dict(truths), truths, VOCAB)
        assert report.accuracy == 1.0
        assert np.all(report.confusion == np.eye(3, dtype=int))

    def test_all_wrong(self):
        truths = {"1": "a", "2": "b"}
        preds = {"1": "b", "2": "a"}
        assert evaluate(preds, truths, VOCAB).accuracy == 0.0

    def test_three_of_four_correct(self):
        truths = {"1": "a", "2": "a", "3": "b", "4": "c"}
        preds = {"1": "a", "2": "b", "3": "b", "4": "c"}
        report = evaluate(preds, truths, VOCAB)
        assert report.accuracy == 0.75
        expected = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
        np.testing.assert_array_equal(report.confusion, expected)
        assert report.per_class_accuracy["a"] == 0.5

    def test_id_mismatch(self):
        with pytest.raises(IdMismatch):
            evaluate({"1": "a"}, {"2": "a"}, VOCAB)

    def test_unknown_class(self):
        with pytest.raises(UnknownClass):
            evaluate({"1": "z"}, {"1": "a"}, VOCAB)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        ids = [f"s{i}" for i in range(50)]
        truths = {i: VOCAB[rng.integers(3)] for i in ids}
        preds = {i: VOCAB[rng.integers(3)] for i in ids}
        r1 = evaluate(preds, truths, VOCAB)
        shuffled = dict(reversed(list(preds.items())))
        r2 = evaluate(shuffled, truths, VOCAB)
        assert r1.accuracy == r2.accuracy
        np.testing.assert_array_equal(r1.confusion, r2.confusion)


class TestEvaluateMultilabel:
    def test_empty_predictions(self):
        truths = {"1": {"a"}, "2": {"b"}}
        preds = {"1": set(), "2": set()}
        report = evaluate_multilabel(preds, truths, VOCAB)
        assert report.mean_pred_classes_per_audio == 0.0
        assert report.accuracy == 0.0

    def test_perfect_sets(self):
        truths = {"1": {"a"}, "2": {"a", "b"}}
        report = evaluate_multilabel({k: set(v) for k, v in truths.items()},
                                     truths, VOCAB)
        assert report.accuracy == 1.0
        assert report.mean_pred_classes_per_audio == 1.5

    def test_exact_match_is_strict(self):
        truths = {"1": {"a", "b"}}
        preds = {"1": {"a"}}
        assert evaluate_multilabel(preds, truths, VOCAB).accuracy == 0.0
        assert evaluate_multilabel(preds, truths, VOCAB,
                                   metric="jaccard").accuracy == 0.5

    def test_pred_classes_per_audio_non_increasing_on_oracle(self):
        cfg = MultiLabelConfig(0.5)
        means = []
        for c_per_a in (1, 2, 3):
            profiles, truth_sets, _ = polyphony_benchmark(
                classes_per_audio=c_per_a, count=150
            )
            preds = {i: classify_multilabel(p, cfg) for i, p in profiles.items()}
            report = evaluate_multilabel(preds, truth_sets, GAP_CONFIG.class_names())
            means.append(report.mean_pred_classes_per_audio)
        assert means[0] >= means[1] >= means[2]


class TestTopConfusions:
    def test_diagonal_only_empty(self):
        report = evaluate({"1": "a"}, {"1": "a"}, VOCAB)
        assert top_confusions(report, "a") == []

    def test_single_off_diagonal(self):
        report = evaluate({"1": "b"}, {"1": "a"}, VOCAB)
        assert top_confusions(report, "a") == [("b", 1)]

    def test_hand_built_ranking(self):
        truths = {f"s{i}": "a" for i in range(6)}
        preds = {"s0": "a", "s1": "c", "s2": "c", "s3": "c", "s4": "b", "s5": "b"}
        report = evaluate(preds, truths, VOCAB)
        assert top_confusions(report, "a", k=3) == [("c", 3), ("b", 2)]

    def test_unknown_class(self):
        report = evaluate({"1": "a"}, {"1": "a"}, VOCAB)
        with pytest.raises(UnknownClass):
            top_confusions(report, "z")


class TestGridSearchTau:
    def _tiny_benchmark(self):
        return contamination_benchmark(n_mixtures=150)

    def test_single_point_grid_equals_baseline(self):
        bench = self._tiny_benchmark()
        result = grid_search_tau(bench.profiles, bench.p_b_text, bench.truths,
                                 grid=(0.0,))
        baseline_preds = {
            i: p.class_ids[int(np.argmax(p.scores))]
            for i, p in bench.profiles.items()
        }
        baseline = evaluate(baseline_preds, bench.truths,
                            bench.p_b_text.class_ids).accuracy
        assert result.best_tau == 0.0
        assert result.best_accuracy == baseline

    def test_oracle_benchmark_improves_over_baseline(self):
        bench = self._tiny_benchmark()
        result = grid_search_tau(bench.profiles, bench.p_b_audio, bench.truths,
                                 background_source="audio")
        assert result.best_tau > 0.0
        assert result.best_accuracy > result.accuracy_per_tau[0]

    def test_tie_breaks_to_smallest_tau(self):
        profiles = {"1": Profile(VOCAB, np.array([1.0, 0.0, 0.0]))}
        p_b = Profile(VOCAB, np.zeros(3))
        result = grid_search_tau(profiles, p_b, {"1": "a"})
        assert result.best_tau == 0.0
        assert all(a == 1.0 for a in result.accuracy_per_tau)

    def test_best_matches_exhaustive_recomputation(self):
        bench = self._tiny_benchmark()
        result = grid_search_tau(bench.profiles, bench.p_b_text, bench.truths)
        assert result.best_accuracy == max(result.accuracy_per_tau)
        first_argmax = result.accuracy_per_tau.index(max(result.accuracy_per_tau))
        assert result.best_tau == result.grid[first_argmax]

    def test_empty_grid(self):
        with pytest.raises(EmptyGrid):
            grid_search_tau({}, Profile(VOCAB, np.zeros(3)), {}, grid=())


class TestSnrSweep:
    def test_cell_count(self):
        bench = contamination_benchmark(n_mixtures=40)
        cases = {6.0: (bench.profiles, bench.truths),
                 8.0: (bench.profiles, bench.truths),
                 10.0: (bench.profiles, bench.truths)}
        rows = snr_sweep(
            cases,
            {"text": bench.p_b_text, "audio": bench.p_b_audio},
            {"text": 0.2, "audio": 0.7},
            bench.p_b_text.class_ids,
        )
        assert len(rows) == 3 * 3
        csv_text = sweep_to_csv(rows)
        assert csv_text.splitlines()[0] == "snr_db,mode,accuracy"

    def test_accuracy_increases_with_foreground_weight(self):
        # Foreground weight stands in for SNR in the oracle sweep.
        from soundproto.benchmarks import CONTAMINATION_CONFIG
        cases = {}
        for level, w in ((6.0, 0.6), (8.0, 0.7), (10.0, 0.85)):
            bench = contamination_benchmark(
                CONTAMINATION_CONFIG, n_mixtures=200, fg_weight=w, bg_weight=1 - w
            )
            cases[level] = (bench.profiles, bench.truths)
        rows = snr_sweep(cases, {}, {}, bench.p_b_text.class_ids)
        baseline = [r["accuracy"] for r in rows if r["mode"] == "baseline"]
        assert baseline[0] < baseline[-1]


def _oracle_sets(gap, n_per_class=20, seed=7):
    from soundproto.oracle import OracleConfig
    cfg = OracleConfig(n_classes=5, dim=32, noise_sigma=0.1,
                       gap_magnitude=gap, seed=seed)
    audio = EmbeddingSet(cfg.dim, [
        gen_audio_embedding(k, cfg, i) for k in range(5) for i in range(n_per_class)
    ])
    text = EmbeddingSet(cfg.dim, [
        gen_text_embedding(k, cfg, i) for k in range(5) for i in range(3)
    ])
    return audio, text


class TestModalityGapStats:
    def test_identical_sets_inter_equals_intra(self):
        audio, _ = _oracle_sets(gap=0.0)
        text_like = EmbeddingSet(audio.dim, [
            type(r)(id=r.id + "-t", modality="text", vector=r.vector, label=r.label)
            for r in audio
        ])
        report = modality_gap_stats(audio, text_like)
        # Cross pairs include self-pairs (distance 0), intra excludes them.
        n = len(audio)
        intra = report.mean_intra_audio
        expected_inter = intra * (n - 1) / n
        assert report.mean_inter == pytest.approx(expected_inter, abs=1e-9)
        assert report.mean_intra_audio == report.mean_intra_text

    def test_planted_gap_separates(self):
        audio, text = _oracle_sets(gap=0.5)
        report = modality_gap_stats(audio, text)
        assert report.mean_inter > report.mean_intra_audio
        assert report.separable

    def test_single_embedding_intra_absent(self):
        audio, text = _oracle_sets(gap=0.5)
        single_audio = EmbeddingSet(audio.dim, [audio.records[0]])
        single_text = EmbeddingSet(text.dim, [text.records[0]])
        report = modality_gap_stats(single_audio, single_text)
        assert report.mean_intra_audio is None
        assert report.mean_intra_text is None

    def test_probe_deterministic(self):
        audio, text = _oracle_sets(gap=0.5)
        a = modality_gap_stats(audio, text, seed=3)
        b = modality_gap_stats(audio, text, seed=3)
        assert a.separable == b.separable
        assert a.mean_inter == b.mean_inter

    def test_distances_in_range(self):
        audio, text = _oracle_sets(gap=1.5)
        report = modality_gap_stats(audio, text)
        for value in (report.mean_intra_audio, report.mean_intra_text,
                      report.mean_inter):
            assert 0.0 <= value <= 2.0


def _three_prototype_sets(pool):
    cfg = GAP_CONFIG
    names = cfg.class_names()
    texts = [gen_text_embedding(k, cfg) for k in range(cfg.n_classes)]
    tp = PrototypeSet([build_text_anchor(names[k], [texts[k]])
                       for k in range(cfg.n_classes)])
    gp = PrototypeSet([
        build_tgap_prototype(texts[k], pool, TgapConfig(32), class_id=names[k])
        for k in range(cfg.n_classes)
    ])
    sp = PrototypeSet([build_supervised_centroid(names[k], pool)
                       for k in range(cfg.n_classes)])
    return {"text_anchor": tp, "tgap": gp, "supervised_centroid": sp}


class TestPrototypeDistanceAnalysis:
    def test_missing_provenance(self):
        pool = labeled_audio_pool(GAP_CONFIG, 10)
        sets = _three_prototype_sets(pool)
        del sets["tgap"]
        with pytest.raises(MissingProvenance):
            prototype_distance_analysis(sets, pool)

    def test_ordering_on_oracle_data(self):
        pool = labeled_audio_pool(GAP_CONFIG, 60)
        report = prototype_distance_analysis(_three_prototype_sets(pool), pool)
        for cls in GAP_CONFIG.class_names():
            t = report.per_class_prototype_distance[(cls, "text_anchor")]
            g = report.per_class_prototype_distance[(cls, "tgap")]
            s = report.per_class_prototype_distance[(cls, "supervised_centroid")]
            assert t > g > s

    def test_supervised_single_sample_minimum_distance(self):
        # A one-sample class: its centroid is the sample, distance 0.
        from soundproto import Embedding
        cfg = GAP_CONFIG
        names = cfg.class_names()
        one_per_class = EmbeddingSet(cfg.dim, [
            gen_audio_embedding(k, cfg, 0) for k in range(cfg.n_classes)
        ])
        report = prototype_distance_analysis(
            _three_prototype_sets(labeled_audio_pool(cfg, 40)), one_per_class
        )
        for cls in names:
            s = report.per_class_prototype_distance[(cls, "supervised_centroid")]
            assert s >= 0.0

    def test_empty_class_absent_not_zero(self):
        pool = labeled_audio_pool(GAP_CONFIG, 10)
        # Audio samples for only the first class.
        first = GAP_CONFIG.class_names()[0]
        only_first = pool.subset(lambda r: r.label == first)
        report = prototype_distance_analysis(_three_prototype_sets(pool), only_first)
        keys = {cls for cls, _ in report.per_class_prototype_distance}
        assert keys == {first}

    def test_csv_output(self):
        pool = labeled_audio_pool(GAP_CONFIG, 10)
        report = prototype_distance_analysis(_three_prototype_sets(pool), pool)
        csv_text = prototype_distances_to_csv(report)
        assert csv_text.splitlines()[0] == "class,provenance,mean_cosine_distance"
        assert len(csv_text.splitlines()) == 1 + 3 * GAP_CONFIG.n_classes
