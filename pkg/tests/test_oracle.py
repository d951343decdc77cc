import numpy as np
import pytest

from soundproto.errors import DimTooSmall, EmptyComponents
from soundproto.oracle import (
    OracleConfig,
    gap_vector,
    gen_audio_embedding,
    gen_class_directions,
    gen_mixture_embedding,
    gen_text_embedding,
)


class TestClassDirections:
    def test_single_class_unit_vector(self):
        cfg = OracleConfig(n_classes=1, dim=4, seed=0)
        d = gen_class_directions(cfg)
        assert d.shape == (1, 4)
        assert np.linalg.norm(d[0]) == pytest.approx(1.0, abs=1e-12)

    def test_two_by_two_orthogonal(self):
        cfg = OracleConfig(n_classes=2, dim=2, seed=0)
        d = gen_class_directions(cfg)
        assert abs(d[0] @ d[1]) <= 1e-9

    def test_gram_matrix_is_identity(self):
        cfg = OracleConfig(n_classes=10, dim=64, seed=7)
        d = gen_class_directions(cfg)
        np.testing.assert_allclose(d @ d.T, np.eye(10), atol=1e-9)

    def test_dim_too_small(self):
        with pytest.raises(DimTooSmall):
            OracleConfig(n_classes=5, dim=3, seed=0)

    def test_deterministic_in_seed(self):
        a = gen_class_directions(OracleConfig(n_classes=4, dim=8, seed=3))
        b = gen_class_directions(OracleConfig(n_classes=4, dim=8, seed=3))
        np.testing.assert_array_equal(a, b)
        c = gen_class_directions(OracleConfig(n_classes=4, dim=8, seed=4))
        assert not np.array_equal(a, c)


class TestAudioEmbedding:
    def test_zero_noise_is_class_direction(self):
        cfg = OracleConfig(n_classes=3, dim=8, noise_sigma=0.0, seed=1)
        e = gen_audio_embedding(1, cfg, 0)
        np.testing.assert_allclose(
            e.vector.astype(np.float64), gen_class_directions(cfg)[1], atol=1e-7
        )

    def test_mean_cosine_to_direction_high(self):
        cfg = OracleConfig(n_classes=3, dim=16, noise_sigma=0.1, seed=2)
        d = gen_class_directions(cfg)[0]
        cosines = [
            gen_audio_embedding(0, cfg, i).vector.astype(np.float64) @ d
            for i in range(1000)
        ]
        assert np.mean(cosines) > 0.9

    def test_deterministic_per_draw(self):
        cfg = OracleConfig(n_classes=3, dim=8, noise_sigma=0.2, seed=2)
        a = gen_audio_embedding(1, cfg, 5)
        b = gen_audio_embedding(1, cfg, 5)
        assert a.vector.tobytes() == b.vector.tobytes()
        c = gen_audio_embedding(1, cfg, 6)
        assert a.vector.tobytes() != c.vector.tobytes()

    def test_unit_norm(self):
        cfg = OracleConfig(n_classes=3, dim=8, noise_sigma=0.5, seed=2)
        for i in range(20):
            e = gen_audio_embedding(2, cfg, i)
            assert abs(np.linalg.norm(e.vector.astype(np.float64)) - 1.0) <= 1e-6

    def test_labeled_and_audio_modality(self):
        cfg = OracleConfig(n_classes=3, dim=8, seed=2)
        e = gen_audio_embedding(2, cfg, 0)
        assert e.modality == "audio"
        assert e.label == cfg.class_names()[2]


class TestTextEmbedding:
    def test_zero_gap_equals_direction(self):
        cfg = OracleConfig(n_classes=3, dim=8, gap_magnitude=0.0, seed=1)
        e = gen_text_embedding(1, cfg)
        np.testing.assert_allclose(
            e.vector.astype(np.float64), gen_class_directions(cfg)[1], atol=1e-7
        )

    def test_gap_vector_norm(self):
        cfg = OracleConfig(n_classes=3, dim=8, gap_magnitude=0.5, seed=1)
        assert np.linalg.norm(gap_vector(cfg)) == pytest.approx(0.5, abs=1e-12)

    def test_gap_shared_across_classes(self):
        cfg = OracleConfig(n_classes=4, dim=16, gap_magnitude=0.5, seed=1)
        d = gen_class_directions(cfg)
        g = gap_vector(cfg)
        for k in range(4):
            e = gen_text_embedding(k, cfg)
            expected = (d[k] + g) / np.linalg.norm(d[k] + g)
            np.testing.assert_allclose(e.vector.astype(np.float64), expected,
                                       atol=1e-7)

    def test_deterministic(self):
        cfg = OracleConfig(n_classes=3, dim=8, seed=1)
        assert (gen_text_embedding(0, cfg).vector.tobytes()
                == gen_text_embedding(0, cfg).vector.tobytes())

    def test_text_modality(self):
        cfg = OracleConfig(n_classes=3, dim=8, seed=1)
        assert gen_text_embedding(0, cfg).modality == "text"


class TestMixtureEmbedding:
    def test_single_component_equals_audio_draw(self):
        cfg = OracleConfig(n_classes=3, dim=8, noise_sigma=0.1, seed=4)
        mix = gen_mixture_embedding([(1, 1.0)], cfg, 7)
        plain = gen_audio_embedding(1, cfg, 7)
        np.testing.assert_allclose(
            mix.vector.astype(np.float64), plain.vector.astype(np.float64),
            atol=1e-7,
        )
        assert mix.label is None

    def test_symmetric_mixture_is_bisector(self):
        cfg = OracleConfig(n_classes=3, dim=8, noise_sigma=0.0, seed=4)
        d = gen_class_directions(cfg)
        mix = gen_mixture_embedding([(0, 0.5), (2, 0.5)], cfg, 0)
        expected = (d[0] + d[2]) / np.linalg.norm(d[0] + d[2])
        np.testing.assert_allclose(mix.vector.astype(np.float64), expected,
                                   atol=1e-6)

    def test_empty_components(self):
        cfg = OracleConfig(n_classes=3, dim=8, seed=4)
        with pytest.raises(EmptyComponents):
            gen_mixture_embedding([], cfg, 0)

    def test_dominant_foreground_classified_correctly_most_draws(self):
        # fg 0.7 / bg 0.3 at low noise: the nearest class direction is the
        # foreground in at least 90% of draws (brute-force check).
        cfg = OracleConfig(n_classes=5, dim=16, noise_sigma=0.05, seed=4)
        d = gen_class_directions(cfg)
        hits = 0
        n = 200
        for i in range(n):
            mix = gen_mixture_embedding([(2, 0.7), (4, 0.3)], cfg, i)
            sims = d @ mix.vector.astype(np.float64)
            hits += int(np.argmax(sims) == 2)
        assert hits / n >= 0.9


class TestContaminationRealism:
    def test_heavy_contamination_drops_accuracy(self):
        # fg 0.55 / bg 0.45 at noise 0.15: baseline accuracy at least 10
        # points below clean-audio accuracy.
        cfg = OracleConfig(n_classes=10, dim=64, noise_sigma=0.15, seed=7)
        d = gen_class_directions(cfg)
        rng = np.random.default_rng(0)
        n = 400
        clean_hits = mixed_hits = 0
        for i in range(n):
            fg = int(rng.integers(10))
            bg = int((fg + 1 + rng.integers(9)) % 10)
            clean = gen_audio_embedding(fg, cfg, 50_000 + i)
            mixed = gen_mixture_embedding([(fg, 0.55), (bg, 0.45)], cfg, 60_000 + i)
            clean_hits += int(np.argmax(d @ clean.vector.astype(np.float64)) == fg)
            mixed_hits += int(np.argmax(d @ mixed.vector.astype(np.float64)) == fg)
        assert clean_hits / n - mixed_hits / n >= 0.10
