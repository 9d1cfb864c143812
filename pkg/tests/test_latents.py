import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unimesh.latents import (
    D_COND,
    D_IMG,
    D_TXT,
    LatentSimulator,
    as_conditioning_latent,
    embed_text,
    pinv_decode,
    simulate_image_latent,
)
from unimesh.seeding import rng_from


class TestEmbedText:
    def test_empty_text_gives_zero_vector(self):
        assert np.array_equal(embed_text("", 7), np.zeros(D_TXT))
        assert np.array_equal(embed_text("   \t\n", 7), np.zeros(D_TXT))

    def test_deterministic(self):
        a = embed_text("red sphere", 7)
        b = embed_text("red sphere", 7)
        assert np.array_equal(a, b)

    def test_distinct_words_not_parallel(self):
        red = embed_text("red", 7)
        blue = embed_text("blue", 7)
        assert float(red @ blue) < 0.99

    def test_seed_changes_embedding(self):
        assert not np.array_equal(embed_text("red", 1), embed_text("red", 2))

    @given(st.text(max_size=40), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=50, deadline=None)
    def test_norm_is_zero_or_one(self, text, seed):
        v = embed_text(text, seed)
        norm = np.linalg.norm(v)
        assert norm == 0.0 or abs(norm - 1.0) < 1e-12


class TestSimulator:
    def test_seed_reproducible(self):
        a = LatentSimulator(seed=3)
        b = LatentSimulator(seed=3)
        assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b)

    def test_zero_latent_maps_to_bias(self):
        sim = LatentSimulator(seed=3)
        assert np.allclose(simulate_image_latent(sim, np.zeros(D_COND)), sim.b)

    def test_noise_free_map_is_affine(self):
        sim = LatentSimulator(seed=3)
        rng = rng_from("affine", 0)
        z1 = rng.standard_normal(D_COND)
        z2 = rng.standard_normal(D_COND)
        lhs = simulate_image_latent(sim, z1 + z2)
        rhs = simulate_image_latent(sim, z1) + simulate_image_latent(sim, z2) - sim.b
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_noisy_map_is_pure(self):
        sim = LatentSimulator(seed=3, noise_sigma=0.1)
        z = rng_from("pure", 0).standard_normal(D_COND)
        assert np.array_equal(simulate_image_latent(sim, z), simulate_image_latent(sim, z))

    def test_noise_actually_applied(self):
        clean = LatentSimulator(seed=3)
        noisy = LatentSimulator(seed=3, noise_sigma=0.1)
        z = rng_from("noisy", 0).standard_normal(D_COND)
        assert not np.allclose(simulate_image_latent(clean, z), simulate_image_latent(noisy, z))

    def test_rejects_nonfinite(self):
        sim = LatentSimulator(seed=3)
        bad = np.zeros(D_COND)
        bad[2] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            simulate_image_latent(sim, bad)

    def test_rejects_wrong_dimension(self):
        sim = LatentSimulator(seed=3)
        with pytest.raises(ValueError, match="shape"):
            simulate_image_latent(sim, np.zeros(D_IMG))


class TestPinvDecode:
    def test_round_trip_identity(self):
        sim = LatentSimulator(seed=9)
        rng = rng_from("roundtrip", 1)
        for _ in range(5):
            z = rng.standard_normal(D_COND)
            back = pinv_decode(sim, simulate_image_latent(sim, z))
            assert np.max(np.abs(back - z)) < 1e-9

    def test_bias_only_input_gives_zero(self):
        sim = LatentSimulator(seed=9)
        assert np.max(np.abs(pinv_decode(sim, sim.b))) < 1e-12

    def test_least_squares_beats_random_candidates(self):
        # brute-force oracle: no random candidate achieves a smaller residual
        sim = LatentSimulator(seed=9)
        rng = rng_from("candidates", 2)
        z_img = rng.standard_normal(D_IMG) * 3.0
        z_best = pinv_decode(sim, z_img)
        best_residual = np.linalg.norm(sim.A @ z_best + sim.b - z_img)
        for _ in range(100):
            cand = rng.standard_normal(D_COND) * 2.0
            assert np.linalg.norm(sim.A @ cand + sim.b - z_img) >= best_residual - 1e-12

    def test_validator_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            as_conditioning_latent(np.full(D_COND, np.inf))
