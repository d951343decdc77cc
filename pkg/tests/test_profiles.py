import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soundproto import (
    AdaptationConfig,
    Embedding,
    MultiLabelConfig,
    Profile,
    adapt,
    average_profiles,
    background_profile_from_audio,
    background_profile_from_text,
    build_text_anchor,
    classify,
    classify_multilabel,
    compute_profile,
)
from soundproto.benchmarks import GAP_CONFIG, text_anchor_prototypes
from soundproto.errors import (
    EmptyInput,
    ModalityError,
    TauOutOfRange,
    VocabularyMismatch,
)
from soundproto.oracle import gen_audio_embedding, gen_mixture_embedding
from soundproto.prototypes import PrototypeSet, Prototype


def unit(v):
    return np.asarray(v, dtype=np.float64) / np.linalg.norm(v)


def orthogonal_protos():
    return PrototypeSet([
        Prototype("a", np.array([1.0, 0.0]), "text_anchor", 1),
        Prototype("b", np.array([0.0, 1.0]), "text_anchor", 1),
    ])


def profile(scores, classes=("a", "b", "c")):
    return Profile(tuple(classes[: len(scores)]), np.asarray(scores, dtype=np.float64))


class TestComputeProfile:
    def test_one_hot_at_matching_prototype(self):
        protos = orthogonal_protos()
        e = Embedding("e", "audio", [0.0, 1.0])
        p = compute_profile(e, protos)
        np.testing.assert_array_equal(p.scores, [0.0, 1.0])

    def test_diagonal_embedding(self):
        protos = orthogonal_protos()
        e = Embedding("e", "audio", unit([1.0, 1.0]))
        p = compute_profile(e, protos)
        np.testing.assert_allclose(p.scores, [0.70710678, 0.70710678], atol=1e-7)

    def test_oracle_argmax_is_planted_class(self):
        protos = text_anchor_prototypes(GAP_CONFIG)
        e = gen_audio_embedding(3, GAP_CONFIG, 0)
        p = compute_profile(e, protos)
        # Independent brute-force scan over prototype similarities.
        sims = [float(e.vector.astype(np.float64) @ pr.vector) for pr in protos]
        assert int(np.argmax(p.scores)) == int(np.argmax(sims)) == 3


class TestAverageProfiles:
    def test_single_profile_identity(self):
        p = profile([0.1, 0.2])
        out = average_profiles([p])
        np.testing.assert_array_equal(out.scores, p.scores)

    def test_elementwise_mean(self):
        out = average_profiles([profile([0.2, 0.6]), profile([0.4, 0.0])])
        np.testing.assert_allclose(out.scores, [0.3, 0.3], atol=1e-15)

    def test_profile_and_negation_cancel(self):
        p = profile([0.5, -0.25])
        out = average_profiles([p, profile([-0.5, 0.25])])
        np.testing.assert_array_equal(out.scores, [0.0, 0.0])

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            average_profiles([])

    def test_vocabulary_mismatch(self):
        with pytest.raises(VocabularyMismatch):
            average_profiles([profile([0.1, 0.2]), profile([0.1, 0.2], ("x", "y"))])


class TestBackgroundProfiles:
    def test_one_prompt_equals_compute_profile(self):
        protos = orthogonal_protos()
        prompt = Embedding("p", "text", unit([0.3, 0.7]))
        bg = background_profile_from_text([prompt], protos)
        np.testing.assert_array_equal(bg.scores, compute_profile(prompt, protos).scores)

    def test_three_identical_prompts_equal_one(self):
        protos = orthogonal_protos()
        prompt = Embedding("p", "text", unit([0.3, 0.7]))
        one = background_profile_from_text([prompt], protos)
        three = background_profile_from_text([prompt] * 3, protos)
        np.testing.assert_allclose(three.scores, one.scores, atol=1e-15)

    def test_audio_prompt_rejected_on_text_route(self):
        protos = orthogonal_protos()
        with pytest.raises(ModalityError):
            background_profile_from_text(
                [Embedding("p", "audio", [1.0, 0.0])], protos
            )

    def test_text_rejected_on_audio_route(self):
        protos = orthogonal_protos()
        with pytest.raises(ModalityError):
            background_profile_from_audio(
                [Embedding("p", "text", [1.0, 0.0])], protos
            )

    def test_oracle_background_argmax(self):
        from soundproto.oracle import gen_text_embedding
        protos = text_anchor_prototypes(GAP_CONFIG)
        bg = background_profile_from_text([gen_text_embedding(5, GAP_CONFIG)], protos)
        assert int(np.argmax(bg.scores)) == 5

    def test_oracle_audio_background_argmax(self):
        recs = [gen_audio_embedding(5, GAP_CONFIG, 10_000 + j) for j in range(5)]
        protos = text_anchor_prototypes(GAP_CONFIG)
        bg = background_profile_from_audio(recs, protos)
        assert int(np.argmax(bg.scores)) == 5


class TestAdapt:
    def test_tau_zero_is_identity(self):
        p_s = profile([0.8, 0.4, 0.6])
        p_b = profile([0.5, 0.1, 0.9])
        out = adapt(p_s, p_b, AdaptationConfig(tau=0.0))
        np.testing.assert_array_equal(out.scores, p_s.scores)

    def test_full_cancellation(self):
        p = profile([0.8, 0.4, 0.6])
        out = adapt(p, p, AdaptationConfig(tau=1.0))
        np.testing.assert_array_equal(out.scores, [0.0, 0.0, 0.0])

    def test_hand_evaluated_example(self):
        p_s = profile([0.8, 0.4, 0.6])
        p_b = profile([0.5, 0.1, 0.9])
        out = adapt(p_s, p_b, AdaptationConfig(tau=0.2))
        np.testing.assert_allclose(out.scores, [0.70, 0.38, 0.42], atol=1e-15)

    def test_tau_out_of_range(self):
        with pytest.raises(TauOutOfRange):
            AdaptationConfig(tau=1.5)

    def test_vocabulary_mismatch(self):
        with pytest.raises(VocabularyMismatch):
            adapt(profile([0.1, 0.2]), profile([0.1, 0.2], ("x", "y")),
                  AdaptationConfig(tau=0.5))

    @given(st.integers(0, 2**32 - 1), st.integers(0, 10))
    @settings(max_examples=60)
    def test_linearity_exact(self, seed, tau_step):
        rng = np.random.default_rng(seed)
        tau = tau_step / 10.0
        k = int(rng.integers(1, 12))
        classes = tuple(f"c{i}" for i in range(k))
        s = rng.uniform(-1, 1, k)
        b = rng.uniform(-1, 1, k)
        out = adapt(Profile(classes, s), Profile(classes, b),
                    AdaptationConfig(tau=tau))
        np.testing.assert_array_equal(out.scores, s - tau * b)

    @given(st.integers(0, 2**32 - 1), st.integers(0, 10))
    @settings(max_examples=60)
    def test_argmax_invariant_under_constant_background(self, seed, tau_step):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 12))
        classes = tuple(f"c{i}" for i in range(k))
        p_s = Profile(classes, rng.uniform(-1, 1, k))
        p_b = Profile(classes, np.full(k, float(rng.uniform(-1, 1))))
        out = adapt(p_s, p_b, AdaptationConfig(tau=tau_step / 10.0))
        assert classify(out) == classify(p_s)

    @given(st.integers(0, 2**32 - 1), st.integers(0, 10), st.integers(0, 10))
    @settings(max_examples=60)
    def test_composition(self, seed, t1_step, t2_step):
        # adapt twice against the same background == adapt once with the sum,
        # restated at the arithmetic level.
        if t1_step + t2_step > 10:
            return
        rng = np.random.default_rng(seed)
        t1, t2 = t1_step / 10.0, t2_step / 10.0
        classes = ("a", "b", "c")
        s = rng.uniform(-1, 1, 3)
        b = rng.uniform(-1, 1, 3)
        twice = (s - t1 * b) - t2 * b
        p_once = adapt(Profile(classes, s), Profile(classes, b),
                       AdaptationConfig(tau=min(t1 + t2, 1.0)))
        np.testing.assert_allclose(p_once.scores, twice, atol=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40)
    def test_monotone_suppression_of_background_argmax(self, seed):
        rng = np.random.default_rng(seed)
        classes = tuple(f"c{i}" for i in range(6))
        p_s = Profile(classes, rng.uniform(-1, 1, 6))
        p_b = Profile(classes, rng.uniform(-1, 1, 6))
        bg_idx = int(np.argmax(p_b.scores))
        prev = None
        for tau_step in range(11):
            out = adapt(p_s, p_b, AdaptationConfig(tau=tau_step / 10.0))
            score = out.scores[bg_idx]
            if prev is not None:
                assert score <= prev + 1e-12
            prev = score


class TestClassify:
    def test_one_hot(self):
        assert classify(profile([0.0, 1.0, 0.0])) == "b"

    def test_tie_breaks_to_first_vocab_class(self):
        assert classify(profile([0.5, 0.5, 0.5])) == "a"

    def test_oracle_contaminated_profile_recovers_foreground(self):
        protos = text_anchor_prototypes(GAP_CONFIG)
        names = GAP_CONFIG.class_names()
        e = gen_mixture_embedding([(4, 0.7), (1, 0.3)], GAP_CONFIG, 0)
        p_s = compute_profile(e, protos)
        from soundproto.oracle import gen_text_embedding
        p_b = background_profile_from_text([gen_text_embedding(1, GAP_CONFIG)], protos)
        out = adapt(p_s, p_b, AdaptationConfig(tau=0.2))
        assert classify(out) == names[4]


class TestClassifyMultilabel:
    def test_threshold_minus_one_selects_all(self):
        out = classify_multilabel(profile([0.0, -0.5, 0.3]), MultiLabelConfig(-1.0))
        assert out == {"a", "b", "c"}

    def test_threshold_above_max_selects_none(self):
        out = classify_multilabel(profile([0.0, 0.5, 0.3]), MultiLabelConfig(0.9))
        assert out == set()

    def test_oracle_two_class_mixture_exact_pair(self):
        protos = text_anchor_prototypes(GAP_CONFIG)
        names = GAP_CONFIG.class_names()
        e = gen_mixture_embedding([(2, 0.5), (7, 0.5)], GAP_CONFIG, 1)
        p = compute_profile(e, protos)
        member = sorted(p.scores[i] for i in (2, 7))
        non_member = max(s for i, s in enumerate(p.scores) if i not in (2, 7))
        threshold = (member[0] + non_member) / 2.0
        assert non_member < threshold < member[0]
        out = classify_multilabel(p, MultiLabelConfig(threshold))
        assert out == {names[2], names[7]}


class TestProfileSerialization:
    def test_json_round_trip(self):
        p = Profile(("a", "b"), np.array([0.25, -0.5]),
                    {"source_id": "x", "tau": 0.2})
        back = Profile.from_dict(__import__("json").loads(p.to_json()))
        assert back.class_ids == p.class_ids
        np.testing.assert_array_equal(back.scores, p.scores)
        assert back.meta["source_id"] == "x"
