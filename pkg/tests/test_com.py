import numpy as np
import pytest

from unimesh.adapter import adapter_fingerprint, init_recoverable
from unimesh.com import (
    EditError,
    FrozenWeightsError,
    MeshParams,
    MeshStore,
    apply_edit,
    init_session,
    make_scripted_editor,
    make_scripted_text_to_latent,
    parse_edit_prompt,
    replay_session,
    scripted_edit,
    scripted_text_to_latent,
)
from unimesh.latents import pinv_decode
from unimesh.sdf import decode, marching_cubes
from unimesh.sdf.mesh import mesh_to_obj
from unimesh.sdf.scene import GEOMETRY_SLOTS

MP = MeshParams(resolution=24)


@pytest.fixture(scope="module")
def editor(sim):
    return make_scripted_editor(sim)


@pytest.fixture(scope="module")
def text_to_latent(sim):
    return make_scripted_text_to_latent(sim)


class TestScriptedEdit:
    def test_set_radius_closed_form(self, sim):
        z_img = scripted_text_to_latent("", sim)
        out = scripted_edit(z_img, "sphere.r = 0.7", sim)
        assert decode(pinv_decode(sim, out)).sphere_radius == pytest.approx(0.7, abs=1e-6)

    def test_relative_ops(self, sim):
        z_img = scripted_text_to_latent("", sim)
        up = scripted_edit(z_img, "sphere.r + 0.2", sim)
        assert decode(pinv_decode(sim, up)).sphere_radius == pytest.approx(0.8, abs=1e-6)
        down = scripted_edit(z_img, "sphere.r - 0.1", sim)
        assert decode(pinv_decode(sim, down)).sphere_radius == pytest.approx(0.5, abs=1e-6)

    def test_unicode_minus_accepted(self, sim):
        z_img = scripted_text_to_latent("", sim)
        out = scripted_edit(z_img, "sphere.r − 0.1", sim)
        assert decode(pinv_decode(sim, out)).sphere_radius == pytest.approx(0.5, abs=1e-6)

    def test_color_edit_leaves_geometry(self, sim):
        z_img = scripted_text_to_latent("sphere.r = 0.75; box.hx = 0.5", sim)
        out = scripted_edit(z_img, "color.g = 0.5", sim)
        before = pinv_decode(sim, z_img)
        after = pinv_decode(sim, out)
        assert np.max(np.abs(before[GEOMETRY_SLOTS] - after[GEOMETRY_SLOTS])) < 1e-9
        assert decode(after).albedo[1] == pytest.approx(0.5, abs=1e-9)

    def test_out_of_range_names_interval(self, sim):
        z_img = scripted_text_to_latent("", sim)
        with pytest.raises(EditError, match=r"reachable interval \[0.3, 0.9\]"):
            scripted_edit(z_img, "sphere.r = 1.5", sim)

    def test_unknown_slot(self, sim):
        with pytest.raises(EditError, match="unknown slot"):
            scripted_edit(scripted_text_to_latent("", sim), "sphere.q = 1", sim)

    def test_unparseable_prompt(self, sim):
        with pytest.raises(EditError, match="cannot parse"):
            scripted_edit(scripted_text_to_latent("", sim), "make it red", sim)

    def test_parse_components(self):
        assert parse_edit_prompt("scale = 1.1") == ("scale", "=", 1.1)
        assert parse_edit_prompt("box.hz + 1e-2") == ("box.hz", "+", 0.01)

    def test_scale_slot_range(self, sim):
        z_img = scripted_text_to_latent("", sim)
        out = scripted_edit(z_img, "scale = 1.2", sim)
        assert decode(pinv_decode(sim, out)).global_scale == pytest.approx(1.2, abs=1e-6)
        with pytest.raises(EditError, match="reachable interval"):
            scripted_edit(z_img, "scale = 2.0", sim)

    def test_empty_prompt_maps_to_simulator_bias(self, sim):
        assert np.allclose(scripted_text_to_latent("", sim), sim.b)


class TestSession:
    def test_init_has_single_step(self, text_to_latent, ideal_adapter):
        store = MeshStore()
        s = init_session("", text_to_latent, ideal_adapter, store, MP)
        assert len(s.steps) == 1
        assert s.steps[0].index == 0
        assert s.steps[0].mesh_hash in store

    def test_empty_prompt_step0_is_default_scene_mesh(self, text_to_latent, ideal_adapter):
        # with the exact-inverse adapter, "" decodes to the zero-latent scene
        store = MeshStore()
        s = init_session("", text_to_latent, ideal_adapter, store, MP)
        expect = mesh_to_obj(marching_cubes(decode(np.zeros(16)), MP.resolution, MP.bounds))
        assert store.get(s.steps[0].mesh_hash) == expect

    def test_deterministic_hashes(self, text_to_latent, ideal_adapter):
        a = init_session("sphere.r = 0.8", text_to_latent, ideal_adapter, MeshStore(), MP)
        b = init_session("sphere.r = 0.8", text_to_latent, ideal_adapter, MeshStore(), MP)
        assert a.steps[0].mesh_hash == b.steps[0].mesh_hash

    def test_identity_editor_is_noop(self, text_to_latent, ideal_adapter):
        store = MeshStore()
        s = init_session("box.hy = 0.5", text_to_latent, ideal_adapter, store, MP)
        apply_edit(s, "noop", lambda z, p: z, ideal_adapter, store, MP)
        assert s.steps[1].mesh_hash == s.steps[0].mesh_hash
        assert np.array_equal(s.steps[1].z_cond, s.steps[0].z_cond)

    def test_radius_edit_shifts_decoded_radius(self, sim, text_to_latent, editor, ideal_adapter):
        store = MeshStore()
        s = init_session("", text_to_latent, ideal_adapter, store, MP)
        apply_edit(s, "sphere.r + 0.2", editor, ideal_adapter, store, MP)
        r0 = decode(s.steps[0].z_cond).sphere_radius
        r1 = decode(s.steps[1].z_cond).sphere_radius
        assert r1 - r0 == pytest.approx(0.2, abs=1e-9)

    def test_chained_edits_compose(self, sim, text_to_latent, editor, ideal_adapter):
        store = MeshStore()
        s = init_session("", text_to_latent, ideal_adapter, store, MP)
        for _ in range(3):
            apply_edit(s, "sphere.r + 0.05", editor, ideal_adapter, store, MP)
        assert decode(s.steps[3].z_cond).sphere_radius == pytest.approx(0.75, abs=1e-9)

    def test_editor_failure_leaves_session_unchanged(self, text_to_latent, editor, ideal_adapter):
        store = MeshStore()
        s = init_session("", text_to_latent, ideal_adapter, store, MP)
        with pytest.raises(EditError):
            apply_edit(s, "sphere.r = 99", editor, ideal_adapter, store, MP)
        assert len(s.steps) == 1

    def test_fingerprint_mismatch_rejected(self, sim, text_to_latent, editor, ideal_adapter):
        store = MeshStore()
        s = init_session("", text_to_latent, ideal_adapter, store, MP)
        other = init_recoverable(sim, seed=99)
        with pytest.raises(FrozenWeightsError):
            apply_edit(s, "sphere.r + 0.1", editor, other, store, MP)

    def test_z_cond_reproducible_from_z_img(self, text_to_latent, editor, ideal_adapter):
        from unimesh.adapter import forward

        store = MeshStore()
        s = init_session("box.hx = 0.45", text_to_latent, ideal_adapter, store, MP)
        apply_edit(s, "sphere.y + 0.1", editor, ideal_adapter, store, MP)
        for step in s.steps:
            assert np.array_equal(forward(ideal_adapter, step.z_img), step.z_cond)

    def test_replay_reproduces_hashes(self, text_to_latent, editor, ideal_adapter):
        store = MeshStore()
        s = init_session("sphere.r = 0.7", text_to_latent, ideal_adapter, store, MP)
        for prompt in ("sphere.r - 0.05", "box.hz + 0.1", "color.r = 0.9"):
            apply_edit(s, prompt, editor, ideal_adapter, store, MP)
        fresh = replay_session(s, text_to_latent, editor, ideal_adapter, MP)
        assert [a.mesh_hash for a in s.steps] == [b.mesh_hash for b in fresh.steps]

    def test_fingerprint_constant_across_edits(self, text_to_latent, editor, ideal_adapter):
        store = MeshStore()
        s = init_session("", text_to_latent, ideal_adapter, store, MP)
        fp = adapter_fingerprint(ideal_adapter)
        for _ in range(4):
            apply_edit(s, "box.hx + 0.01", editor, ideal_adapter, store, MP)
        assert adapter_fingerprint(ideal_adapter) == fp == s.adapter_fingerprint

    def test_session_json_round_trip(self, text_to_latent, editor, ideal_adapter):
        from unimesh.com import EditSession

        store = MeshStore()
        s = init_session("sphere.r = 0.7", text_to_latent, ideal_adapter, store, MP)
        apply_edit(s, "sphere.r + 0.1", editor, ideal_adapter, store, MP)
        back = EditSession.from_json_dict(s.to_json_dict())
        assert back.id == s.id
        assert [st.mesh_hash for st in back.steps] == [st.mesh_hash for st in s.steps]
        assert all(
            np.array_equal(a.z_img, b.z_img) and np.array_equal(a.z_cond, b.z_cond)
            for a, b in zip(back.steps, s.steps)
        )


class TestMeshStore:
    def test_content_addressing(self):
        store = MeshStore()
        key = store.put(b"v 0 0 0\n")
        assert key == MeshStore.content_hash(b"v 0 0 0\n")
        assert store.get(key) == b"v 0 0 0\n"
        assert store.put(b"v 0 0 0\n") == key  # idempotent
