"""Benchmark the numba kernels against their pure-numpy twins.

Runs each hot kernel on representative desk-scale workloads, checks the two
backends agree to floating-point tolerance, and prints a timing table.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from unimesh import backend
from unimesh.align import _nn_jit, _nn_numpy
from unimesh.reflexion import _raster_jit, _raster_numpy, view_directions
from unimesh.sdf.eval import N_GEOMETRY_PARAMS, _eval_jit, _eval_numpy
from unimesh.sdf.marching import marching_cubes
from unimesh.sdf.scene import SdfScene, decode
from unimesh.seeding import rng_from


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sdf(repeat: int):
    rng = rng_from("bench-sdf", 0)
    params = decode(rng.standard_normal(16)).geometry_params()
    pts = np.ascontiguousarray(rng.uniform(-1.5, 1.5, size=(200_000, 3)))
    n = pts.shape[0]

    def run(fn):
        val = np.empty(n)
        gp = np.empty((n, 3))
        gt = np.empty((n, N_GEOMETRY_PARAMS))
        fn(params, pts, True, True, val, gp, gt)
        return val, gp, gt

    ref = run(_eval_numpy)
    out = run(_eval_jit)
    for a, b in zip(ref, out):
        assert np.allclose(a, b, atol=1e-9), "backend mismatch in sdf kernel"
    t_np = timed(lambda: run(_eval_numpy), repeat)
    t_nb = timed(lambda: run(_eval_jit), repeat)
    return "scene sdf eval+grads (200k pts)", t_np, t_nb


def bench_nn(repeat: int):
    rng = rng_from("bench-nn", 0)
    src = np.ascontiguousarray(rng.standard_normal((2048, 3)))
    dst = np.ascontiguousarray(rng.standard_normal((2048, 3)))

    def run(fn):
        idx = np.empty(src.shape[0], dtype=np.int64)
        d2 = np.empty(src.shape[0])
        fn(src, dst, idx, d2)
        return idx, d2

    ri, rd = run(_nn_numpy)
    oi, od = run(_nn_jit)
    assert np.array_equal(ri, oi) and np.allclose(rd, od, atol=1e-12), "backend mismatch in nn"
    t_np = timed(lambda: run(_nn_numpy), repeat)
    t_nb = timed(lambda: run(_nn_jit), repeat)
    return "nearest neighbors (2048 x 2048)", t_np, t_nb


def bench_raster(repeat: int):
    mesh = marching_cubes(SdfScene.sphere(0.6), 64, ((-1, -1, -1), (1, 1, 1)))
    verts = mesh.vertices - mesh.vertices.mean(axis=0)
    f = mesh.faces
    direction = view_directions(16)[0]
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(up, direction)
    right /= np.linalg.norm(right)
    vup = np.cross(direction, right)
    res = 256
    ppu = res / 2.0
    px = (verts @ right + 1.0) * ppu
    py = (1.0 - verts @ vup) * ppu
    depth = 3.0 - verts @ direction
    tri_px = np.ascontiguousarray(np.stack([px[f], py[f]], axis=2))
    tri_depth = np.ascontiguousarray(depth[f])
    normals = np.ascontiguousarray(np.cross(verts[f[:, 1]] - verts[f[:, 0]], verts[f[:, 2]] - verts[f[:, 0]]))
    normals /= np.linalg.norm(normals, axis=1)[:, None]

    def run(fn):
        db = np.full((res, res), np.inf)
        nb = np.zeros((res, res, 3))
        mb = np.zeros((res, res), dtype=bool)
        fn(tri_px, tri_depth, normals, res, db, nb, mb)
        return db, nb, mb

    ref = run(_raster_numpy)
    out = run(_raster_jit)
    assert np.array_equal(ref[2], out[2]), "backend mismatch in raster mask"
    assert np.allclose(np.where(np.isfinite(ref[0]), ref[0], 0), np.where(np.isfinite(out[0]), out[0], 0), atol=1e-9)
    t_np = timed(lambda: run(_raster_numpy), repeat)
    t_nb = timed(lambda: run(_raster_jit), repeat)
    return "rasterize sphere mesh (256px)", t_np, t_nb


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not backend.NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"active backend flag: {backend.backend_name()}")
    rows = [bench(args.repeat) for bench in (bench_sdf, bench_nn, bench_raster)]
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for name, t_np, t_nb in rows:
        print(f"{name:<{width}}  {t_np * 1e3:>8.2f}ms  {t_nb * 1e3:>8.2f}ms  {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
