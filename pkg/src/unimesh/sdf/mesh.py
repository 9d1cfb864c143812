"""Triangle mesh and point cloud containers plus ASCII OBJ / PLY exchange."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PointCloud:
    points: np.ndarray  # (n, 3)
    normals: np.ndarray | None = None  # (n, 3) unit vectors

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point cloud contains non-finite coordinates")
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if self.normals.shape != self.points.shape:
                raise ValueError("normals shape must match points")

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (nv, 3)
    faces: np.ndarray  # (nf, 3) int indices
    colors: np.ndarray | None = None  # (nv, 3) in [0, 1]

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        nv = self.vertices.shape[0]
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= nv):
            raise ValueError("face indices out of range")
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
            if self.colors.shape[0] != nv:
                raise ValueError("per-vertex colors must match vertex count")

    @property
    def is_empty(self) -> bool:
        return self.faces.shape[0] == 0

    def edge_count(self) -> int:
        """Distinct undirected edges referenced by the faces."""
        if self.is_empty:
            return 0
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0).shape[0]

    def euler_characteristic(self) -> int:
        return self.vertices.shape[0] - self.edge_count() + self.faces.shape[0]

    def signed_volume(self) -> float:
        """Positive for a closed surface with outward-facing winding."""
        v = self.vertices
        f = self.faces
        a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def mesh_to_obj(mesh: TriangleMesh) -> bytes:
    """ASCII OBJ with 1-based faces; vertex colors as extended 'v x y z r g b'."""
    lines = []
    if mesh.colors is not None:
        for v, c in zip(mesh.vertices, mesh.colors):
            lines.append(
                f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])} {_fmt(c[0])} {_fmt(c[1])} {_fmt(c[2])}"
            )
    else:
        for v in mesh.vertices:
            lines.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return ("\n".join(lines) + "\n").encode("ascii")


def mesh_from_obj(data: bytes | str) -> TriangleMesh:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    verts: list[list[float]] = []
    colors: list[list[float]] = []
    faces: list[list[int]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            nums = [float(x) for x in parts[1:]]
            if len(nums) not in (3, 6):
                raise ValueError(f"malformed vertex line: {raw!r}")
            verts.append(nums[:3])
            if len(nums) == 6:
                colors.append(nums[3:])
        elif parts[0] == "f":
            # accept "f 1 2 3" and "f 1/..  2/.. 3/.."
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            if len(idx) != 3:
                raise ValueError("only triangle faces are supported")
            faces.append(idx)
    if colors and len(colors) != len(verts):
        raise ValueError("vertex colors must be present on all vertices or none")
    return TriangleMesh(
        vertices=np.asarray(verts, dtype=np.float64).reshape(-1, 3),
        faces=np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        colors=np.asarray(colors, dtype=np.float64) if colors else None,
    )


def cloud_to_ply(cloud: PointCloud) -> bytes:
    """ASCII PLY point cloud (positions, optional normals)."""
    n = len(cloud)
    header = ["ply", "format ascii 1.0", f"element vertex {n}"]
    header += ["property double x", "property double y", "property double z"]
    if cloud.normals is not None:
        header += ["property double nx", "property double ny", "property double nz"]
    header.append("end_header")
    lines = list(header)
    if cloud.normals is not None:
        for p, nrm in zip(cloud.points, cloud.normals):
            lines.append(" ".join(_fmt(x) for x in (*p, *nrm)))
    else:
        for p in cloud.points:
            lines.append(" ".join(_fmt(x) for x in p))
    return ("\n".join(lines) + "\n").encode("ascii")
