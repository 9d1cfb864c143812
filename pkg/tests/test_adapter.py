import numpy as np
import pytest

from unimesh.adapter import MeshHeadAdapter, adapter_fingerprint, forward, init_recoverable
from unimesh.latents import simulate_image_latent
from unimesh.seeding import rng_from


@pytest.fixture
def adapter(sim):
    return init_recoverable(sim, seed=7)


class TestForward:
    def test_zero_delta_is_base_map(self, sim):
        a = init_recoverable(sim, seed=7)
        a.bias[:] = 0.0
        z = rng_from("fwd", 0).standard_normal(32)
        assert np.allclose(forward(a, z), a.base_W @ z, atol=1e-15)

    def test_affine(self, adapter):
        rng = rng_from("affine", 1)
        z1 = rng.standard_normal(32)
        z2 = rng.standard_normal(32)
        lhs = forward(adapter, z1) + forward(adapter, z2) - forward(adapter, np.zeros(32))
        assert np.allclose(lhs, forward(adapter, z1 + z2), atol=1e-9)

    def test_delta_rank_at_most_four(self, sim):
        a = init_recoverable(sim, seed=3)
        a.lora_B[:] = rng_from("rank", 2).standard_normal(a.lora_B.shape)
        sv = np.linalg.svd(a.delta(), compute_uv=False)
        assert np.all(sv[4:] < 1e-9 * sv[0])

    def test_dimension_mismatch(self, adapter):
        with pytest.raises(ValueError):
            forward(adapter, np.zeros(16))


class TestInitRecoverable:
    def test_initial_map_is_off(self, sim, adapter):
        # mean latent error over synthetic pairs must be visibly nonzero
        rng = rng_from("init-err", 3)
        errs = []
        for _ in range(32):
            z_star = rng.standard_normal(16)
            z_img = simulate_image_latent(sim, z_star)
            errs.append(np.linalg.norm(forward(adapter, z_img) - z_star))
        assert np.mean(errs) > 0.1

    def test_closed_form_solution_recovers_inverse(self, sim):
        # lora_B @ lora_A = -(r/alpha) E cancels the perturbation exactly
        a = init_recoverable(sim, seed=7)
        E = a.base_W - np.linalg.pinv(sim.A)
        U, S, Vt = np.linalg.svd(E)
        r = a.rank
        a.lora_B[:] = -(U[:, :r] * S[:r]) * (r / a.alpha)
        a.lora_A[:] = Vt[:r]
        rng = rng_from("ideal", 4)
        for _ in range(10):
            z_star = rng.standard_normal(16)
            z_img = simulate_image_latent(sim, z_star)
            assert np.linalg.norm(forward(a, z_img) - z_star) < 1e-9

    def test_perturbation_norm(self, sim, adapter):
        E = adapter.base_W - np.linalg.pinv(sim.A)
        assert np.linalg.norm(E) == pytest.approx(0.5, abs=1e-12)
        assert np.linalg.matrix_rank(E) <= 4

    def test_zero_lora_b_means_base_map_exactly(self, adapter):
        assert np.array_equal(adapter.lora_B, np.zeros_like(adapter.lora_B))
        assert np.array_equal(adapter.effective_map(), adapter.base_W)

    def test_bias_centers_zero_latent(self, sim, adapter):
        # zero-delta adapter maps the simulator bias image to the zero latent
        out = forward(adapter, sim.b)
        E = adapter.base_W - np.linalg.pinv(sim.A)
        assert np.allclose(out, E @ sim.b, atol=1e-12)


class TestSerialization:
    def test_json_round_trip(self, adapter, tmp_path):
        path = tmp_path / "adapter.json"
        adapter.save(path)
        back = MeshHeadAdapter.load(path)
        assert adapter_fingerprint(back) == adapter_fingerprint(adapter)
        z = rng_from("ser", 5).standard_normal(32)
        assert np.array_equal(forward(back, z), forward(adapter, z))

    def test_fingerprint_sensitive_to_every_block(self, adapter):
        fp = adapter_fingerprint(adapter)
        b = MeshHeadAdapter.from_json_dict(adapter.to_json_dict())
        b.lora_A[0, 0] += 1e-12
        assert adapter_fingerprint(b) != fp
        c = MeshHeadAdapter.from_json_dict(adapter.to_json_dict())
        c.bias[3] += 1e-12
        assert adapter_fingerprint(c) != fp

    def test_base_w_is_write_protected(self, adapter):
        with pytest.raises(ValueError):
            adapter.base_W[0, 0] = 99.0
