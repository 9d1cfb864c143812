import numpy as np
import pytest

from unimesh import backend
from unimesh.sdf import (
    SdfScene,
    decode,
    marching_cubes,
    sample_surface,
    sdf_eval,
    sdf_eval_batch,
    sdf_grad,
    sdf_param_grad_batch,
)
from unimesh.sdf import sampling as sampling_mod
from unimesh.sdf.eval import N_GEOMETRY_PARAMS, _eval_jit, _eval_numpy
from unimesh.sdf.scene import invert_affine_slot, invert_scale_slot
from unimesh.seeding import rng_from


# independent primitive SDF oracles (scalar, written separately from the kernels)
def oracle_sphere(p, center, radius):
    return np.linalg.norm(np.asarray(p) - np.asarray(center)) - radius


def oracle_box(p, center, half):
    q = np.abs(np.asarray(p) - np.asarray(center)) - np.asarray(half)
    return np.linalg.norm(np.maximum(q, 0.0)) + min(max(q[0], q[1], q[2]), 0.0)


def oracle_scene(scene, p):
    q = np.asarray(p) / scene.global_scale
    ds = oracle_sphere(q, scene.sphere_center, scene.sphere_radius)
    db = oracle_box(q, scene.box_center, scene.box_half_extents)
    k = scene.smooth_k
    h = min(max(0.5 + 0.5 * (db - ds) / k, 0.0), 1.0)
    return scene.global_scale * (db * (1 - h) + ds * h - k * h * (1 - h))


class TestDecode:
    def test_zero_latent_defaults(self):
        s = decode(np.zeros(16))
        assert np.allclose(s.sphere_center, 0) and s.sphere_radius == pytest.approx(0.6)
        assert np.allclose(s.box_center, 0) and np.allclose(s.box_half_extents, 0.4)
        assert s.smooth_k == pytest.approx(0.1)
        assert np.allclose(s.albedo, 0.5)
        assert s.global_scale == pytest.approx(1.0)

    def test_radius_slot_closed_form(self):
        z = np.zeros(16)
        z[3] = np.arctanh(1.0 / 3.0)
        assert decode(z).sphere_radius == pytest.approx(0.7, abs=1e-12)

    def test_reserved_slot_ignored(self):
        z = rng_from("reserved", 0).standard_normal(16)
        z2 = z.copy()
        z2[15] += 5.0
        a, b = decode(z), decode(z2)
        assert np.array_equal(a.geometry_params(), b.geometry_params())
        assert np.array_equal(a.albedo, b.albedo)

    def test_parameters_always_in_range(self):
        rng = rng_from("ranges", 1)
        for _ in range(50):
            s = decode(rng.standard_normal(16) * 3.0)
            assert 0.3 < s.sphere_radius < 0.9
            assert np.all((0.2 < s.box_half_extents) & (s.box_half_extents < 0.6))
            assert 0.05 < s.smooth_k < 0.15
            assert np.all((0.0 < s.albedo) & (s.albedo < 1.0))
            assert np.exp(-0.3) < s.global_scale < np.exp(0.3)

    def test_wrong_dimension_rejected(self):
        with pytest.raises(ValueError):
            decode(np.zeros(15))

    def test_slot_inversion_round_trip(self):
        assert invert_affine_slot(0.7, 0.6, 0.3) == pytest.approx(np.arctanh(1 / 3))
        with pytest.raises(ValueError, match=r"\[0.3, 0.9\]"):
            invert_affine_slot(1.5, 0.6, 0.3)
        s = decode(np.zeros(16))
        assert np.exp(0.3 * np.tanh(invert_scale_slot(1.2))) == pytest.approx(1.2)
        with pytest.raises(ValueError):
            invert_scale_slot(2.0)


class TestSdfEval:
    def test_sphere_exterior_point(self):
        s = SdfScene.sphere(1.0)
        assert sdf_eval(s, (2, 0, 0)) == pytest.approx(1.0, abs=1e-12)

    def test_sphere_center(self):
        s = SdfScene.sphere(1.0)
        assert sdf_eval(s, (0, 0, 0)) == pytest.approx(-1.0, abs=1e-12)

    def test_smooth_union_hand_value(self):
        # default scene at (1.5, 0, 0): d_sphere = 0.9, d_box = 1.1, h clamps to 1
        s = decode(np.zeros(16))
        assert sdf_eval(s, (1.5, 0, 0)) == pytest.approx(0.9, abs=1e-12)

    def test_matches_scalar_oracle(self):
        rng = rng_from("oracle", 3)
        for _ in range(5):
            scene = decode(rng.standard_normal(16))
            pts = rng.uniform(-2, 2, size=(50, 3))
            vals = sdf_eval_batch(scene, pts)
            expect = [oracle_scene(scene, p) for p in pts]
            assert np.allclose(vals, expect, atol=1e-12)

    def test_smooth_union_sandwich(self):
        # blend stays within k/4 of the hard minimum
        rng = rng_from("sandwich", 4)
        for _ in range(5):
            scene = decode(rng.standard_normal(16))
            pts = rng.uniform(-2, 2, size=(200, 3))
            vals = sdf_eval_batch(scene, pts)
            k = scene.smooth_k * scene.global_scale
            for v, p in zip(vals, pts):
                q = p / scene.global_scale
                hard_min = scene.global_scale * min(
                    oracle_sphere(q, scene.sphere_center, scene.sphere_radius),
                    oracle_box(q, scene.box_center, scene.box_half_extents),
                )
                assert hard_min - k / 4 - 1e-12 <= v <= hard_min + k / 4 + 1e-12

    def test_backend_twins_agree(self):
        rng = rng_from("twins", 5)
        params = decode(rng.standard_normal(16)).geometry_params()
        pts = np.ascontiguousarray(rng.uniform(-2, 2, size=(500, 3)))
        outs = []
        for fn in (_eval_numpy, _eval_jit):
            val = np.empty(500)
            gp = np.empty((500, 3))
            gt = np.empty((500, N_GEOMETRY_PARAMS))
            fn(params, pts, True, True, val, gp, gt)
            outs.append((val, gp, gt))
        for a, b in zip(outs[0], outs[1]):
            assert np.allclose(a, b, atol=1e-12)


class TestSdfGrad:
    def test_sphere_radial_gradient(self):
        s = SdfScene.sphere(1.0)
        assert np.allclose(sdf_grad(s, (2, 0, 0)), (1, 0, 0), atol=1e-12)

    def test_finite_difference_oracle(self):
        # central differences at seeded points; kink-adjacent points detected
        # by step-halving disagreement are excluded (measure-zero set)
        rng = rng_from("fd-grad", 6)
        h = 1e-4
        checked = 0
        skipped = 0
        for _ in range(4):
            scene = decode(rng.standard_normal(16))
            pts = rng.uniform(-1.5, 1.5, size=(40, 3))
            grads = np.array([sdf_grad(scene, p) for p in pts])
            for p, g in zip(pts, grads):
                fd = np.zeros(3)
                fd2 = np.zeros(3)
                for i in range(3):
                    e = np.zeros(3)
                    e[i] = 1.0
                    fd[i] = (sdf_eval(scene, p + h * e) - sdf_eval(scene, p - h * e)) / (2 * h)
                    fd2[i] = (sdf_eval(scene, p + 0.5 * h * e) - sdf_eval(scene, p - 0.5 * h * e)) / h
                if np.linalg.norm(fd - fd2) > 1e-4 * max(np.linalg.norm(fd), 1.0):
                    skipped += 1
                    continue
                checked += 1
                rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
                assert rel < 1e-3, f"gradient mismatch at {p}: {rel}"
        assert checked >= 140
        assert skipped <= 10

    def test_eikonal_at_exterior_points(self):
        rng = rng_from("eikonal", 7)
        scene = decode(rng.standard_normal(16))
        pts = []
        while len(pts) < 100:
            cand = rng.uniform(-2.5, 2.5, size=(64, 3))
            vals = sdf_eval_batch(scene, cand)
            pts.extend(cand[vals > 0.05])
        pts = np.asarray(pts[:100])
        norms = np.linalg.norm(np.array([sdf_grad(scene, p) for p in pts]), axis=1)
        assert np.all((norms >= 0.9) & (norms <= 1.1))

    def test_param_grad_finite_difference(self):
        rng = rng_from("fd-param", 8)
        z = rng.standard_normal(16) * 0.6
        scene = decode(z)
        params = scene.geometry_params()
        pts = rng.uniform(-1.4, 1.4, size=(12, 3))
        _, grad_theta = sdf_param_grad_batch(scene, pts)
        h = 1e-5
        for j in range(N_GEOMETRY_PARAMS):
            for i, p in enumerate(pts):
                up = params.copy()
                dn = params.copy()
                up[j] += h
                dn[j] -= h
                vu = np.empty(1); vd = np.empty(1)
                dummy = np.empty((0, 0))
                _eval_numpy(up, p.reshape(1, 3), False, False, vu, dummy, dummy)
                _eval_numpy(dn, p.reshape(1, 3), False, False, vd, dummy, dummy)
                fd = (vu[0] - vd[0]) / (2 * h)
                assert grad_theta[i, j] == pytest.approx(fd, rel=1e-3, abs=1e-6)


class TestSampleSurface:
    def test_sphere_points_on_surface(self):
        cloud = sample_surface(SdfScene.sphere(0.6), 512, seed=3)
        radii = np.linalg.norm(cloud.points, axis=1)
        assert np.max(np.abs(radii - 0.6)) < 1e-4

    def test_sdf_tolerance_contract(self):
        rng = rng_from("surf", 9)
        for _ in range(3):
            scene = decode(rng.standard_normal(16))
            cloud = sample_surface(scene, 256, seed=1)
            assert len(cloud) == 256
            assert np.max(np.abs(sdf_eval_batch(scene, cloud.points))) < 1e-5

    def test_deterministic(self):
        scene = decode(rng_from("det", 0).standard_normal(16))
        a = sample_surface(scene, 128, seed=42)
        b = sample_surface(scene, 128, seed=42)
        assert np.array_equal(a.points, b.points)

    def test_budget_exhaustion_raises(self, monkeypatch):
        monkeypatch.setattr(sampling_mod, "NEWTON_STEPS", 0)
        with pytest.raises(RuntimeError, match="attempts"):
            sample_surface(SdfScene.sphere(0.6), 8, seed=0)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_surface(SdfScene.sphere(0.6), 0, seed=0)


class TestMarchingCubes:
    def test_uniform_sign_gives_empty_mesh(self):
        mesh = marching_cubes(SdfScene.sphere(0.3), 8, ((2, 2, 2), (3, 3, 3)))
        assert mesh.is_empty

    def test_sphere_vertices_near_surface(self, sphere_mesh):
        cell_diag = np.sqrt(3) * (2.0 / 64)
        radii = np.linalg.norm(sphere_mesh.vertices, axis=1)
        assert np.max(np.abs(radii - 0.6)) < cell_diag

    def test_sphere_is_closed_manifold(self, sphere_mesh):
        assert sphere_mesh.euler_characteristic() == 2

    def test_outward_winding(self, sphere_mesh):
        vol = sphere_mesh.signed_volume()
        true_vol = 4.0 / 3.0 * np.pi * 0.6**3
        assert vol > 0
        assert vol == pytest.approx(true_vol, rel=0.02)

    def test_vertices_inside_bounds(self):
        scene = decode(rng_from("bounds", 1).standard_normal(16))
        lo, hi = (-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)
        mesh = marching_cubes(scene, 24, (lo, hi))
        assert np.all(mesh.vertices >= np.asarray(lo) - 1e-12)
        assert np.all(mesh.vertices <= np.asarray(hi) + 1e-12)

    def test_no_degenerate_faces(self, sphere_mesh):
        f = sphere_mesh.faces
        assert np.all(f[:, 0] != f[:, 1])
        assert np.all(f[:, 1] != f[:, 2])
        assert np.all(f[:, 0] != f[:, 2])
        v = sphere_mesh.vertices
        areas = np.linalg.norm(
            np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]), axis=1
        )
        assert areas.min() > 0

    def test_vertex_colors_are_albedo(self):
        z = rng_from("albedo", 2).standard_normal(16)
        scene = decode(z)
        mesh = marching_cubes(scene, 16, ((-2, -2, -2), (2, 2, 2)))
        assert mesh.colors is not None
        assert np.allclose(mesh.colors, scene.albedo[None, :])

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            marching_cubes(SdfScene.sphere(0.6), 4)

    def test_deterministic(self):
        scene = decode(rng_from("mc-det", 3).standard_normal(16))
        a = marching_cubes(scene, 20)
        b = marching_cubes(scene, 20)
        assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.faces, b.faces)


class TestBackendFlag:
    def test_backend_name_matches_flag(self):
        assert backend.backend_name() in ("numba", "numpy")
