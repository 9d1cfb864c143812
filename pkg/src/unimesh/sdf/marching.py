"""Uniform-grid marching cubes with shared-edge vertex welding.

The field is sampled once on the grid (that batch evaluation is the hot
kernel, dispatched in eval.py); everything after is vectorized numpy:

1. every grid edge whose endpoints change sign gets exactly one vertex,
   placed by linear interpolation -- shared edges are welded by construction;
2. each mixed-sign cell emits triangles from the classic connectivity table,
   mapping cell-local edge indices to the global edge vertices;
3. cleanup drops zero-area faces and unreferenced vertices.

Cell corners follow the (x, y, z) offsets (0,0,0) (1,0,0) (1,1,0) (0,1,0)
(0,0,1) (1,0,1) (1,1,1) (0,1,1); a corner with field value < 0 is inside.
"""

from __future__ import annotations

import numpy as np

from .eval import sdf_eval_batch
from .mesh import TriangleMesh
from .scene import SdfScene
from .tables import TRI_TABLE

# local edge -> (base corner offset, axis); base is the lower grid endpoint
_EDGE_BASE = np.array(
    [
        [0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 0],
        [0, 0, 1], [1, 0, 1], [0, 1, 1], [0, 0, 1],
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
    ],
    dtype=np.int64,
)
_EDGE_AXIS = np.array([0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2], dtype=np.int64)

_CORNER_OFFSETS = np.array(
    [
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ],
    dtype=np.int64,
)


def _normalize_bounds(bounds) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (3,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (3,)).copy()
    if np.any(hi <= lo):
        raise ValueError("bounds must satisfy hi > lo on every axis")
    return lo, hi


def marching_cubes(scene: SdfScene, resolution: int, bounds=((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0))) -> TriangleMesh:
    """Extract the zero level set as a triangle mesh with outward winding.

    ``resolution`` is the cell count per axis (>= 8); ``bounds`` an axis
    aligned box (lo, hi).  A field with uniform sign on the grid yields an
    empty mesh.  Vertex colors are set to the scene albedo.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    lo, hi = _normalize_bounds(bounds)
    npts = resolution + 1
    axes = [np.linspace(lo[d], hi[d], npts) for d in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    grid_pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    values = sdf_eval_batch(scene, grid_pts).reshape(npts, npts, npts)
    inside = values < 0.0

    if not inside.any() or inside.all():
        return TriangleMesh(
            vertices=np.zeros((0, 3)), faces=np.zeros((0, 3), dtype=np.int64), colors=None
        )

    # --- one vertex per sign-crossing grid edge, welded globally ---
    cell = (hi - lo) / resolution
    edge_vertex_id = np.full((npts, npts, npts, 3), -1, dtype=np.int64)
    vert_chunks = []
    next_id = 0
    for axis in range(3):
        shift = [slice(None)] * 3
        shift[axis] = slice(1, None)
        base_sl = [slice(None)] * 3
        base_sl[axis] = slice(0, -1)
        v0 = values[tuple(base_sl)]
        v1 = values[tuple(shift)]
        crossed = inside[tuple(base_sl)] != inside[tuple(shift)]
        idx = np.argwhere(crossed)
        if idx.size == 0:
            continue
        a = v0[crossed]
        b = v1[crossed]
        denom = a - b
        t = np.where(np.abs(denom) > 1e-300, a / np.where(denom == 0.0, 1.0, denom), 0.5)
        t = np.clip(t, 0.0, 1.0)
        pos = lo + idx * cell
        pos[:, axis] += t * cell[axis]
        ids = np.arange(next_id, next_id + idx.shape[0])
        edge_vertex_id[idx[:, 0], idx[:, 1], idx[:, 2], axis] = ids
        next_id += idx.shape[0]
        vert_chunks.append(pos)
    vertices = np.concatenate(vert_chunks, axis=0)

    # --- cube configuration per cell, faces from the connectivity table ---
    cube_index = np.zeros((resolution, resolution, resolution), dtype=np.int64)
    for c, (ox, oy, oz) in enumerate(_CORNER_OFFSETS):
        cube_index |= (
            inside[ox : ox + resolution, oy : oy + resolution, oz : oz + resolution].astype(np.int64)
            << c
        )
    mixed = np.argwhere((cube_index > 0) & (cube_index < 255))
    ci = cube_index[mixed[:, 0], mixed[:, 1], mixed[:, 2]]

    # global vertex id of each of the 12 local edges, per mixed cell: (M, 12)
    local_ids = np.empty((mixed.shape[0], 12), dtype=np.int64)
    for e in range(12):
        b = mixed + _EDGE_BASE[e]
        local_ids[:, e] = edge_vertex_id[b[:, 0], b[:, 1], b[:, 2], _EDGE_AXIS[e]]

    tri_rows = TRI_TABLE[ci]  # (M, 16)
    face_chunks = []
    for t0 in range(0, 15, 3):
        tri = tri_rows[:, t0 : t0 + 3]
        keep = tri[:, 0] >= 0
        if not keep.any():
            break
        loc = tri[keep]
        rows = np.flatnonzero(keep)
        f = np.stack(
            [
                local_ids[rows, loc[:, 0]],
                local_ids[rows, loc[:, 1]],
                local_ids[rows, loc[:, 2]],
            ],
            axis=1,
        )
        face_chunks.append(f)
    faces = np.concatenate(face_chunks, axis=0) if face_chunks else np.zeros((0, 3), dtype=np.int64)
    # table winding is inward for this corner layout; flip for outward normals
    faces = faces[:, ::-1]

    # --- cleanup: drop degenerate faces, then unreferenced vertices ---
    distinct = (
        (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    )
    faces = faces[distinct]
    va, vb, vc = (vertices[faces[:, i]] for i in range(3))
    area2 = np.linalg.norm(np.cross(vb - va, vc - va), axis=1)
    faces = faces[area2 > 1e-30]

    used = np.unique(faces)
    remap = np.full(vertices.shape[0], -1, dtype=np.int64)
    remap[used] = np.arange(used.shape[0])
    vertices = vertices[used]
    faces = remap[faces]

    colors = np.tile(np.clip(scene.albedo, 0.0, 1.0), (vertices.shape[0], 1))
    return TriangleMesh(vertices=vertices, faces=faces, colors=colors)
