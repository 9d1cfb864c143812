import numpy as np
import pytest

from unimesh.sdf.mesh import PointCloud, TriangleMesh, cloud_to_ply, mesh_from_obj, mesh_to_obj


@pytest.fixture
def tetra():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    colors = np.tile([0.2, 0.5, 0.8], (4, 1))
    return TriangleMesh(vertices=verts, faces=faces, colors=colors)


class TestObj:
    def test_round_trip_with_colors(self, tetra):
        data = mesh_to_obj(tetra)
        back = mesh_from_obj(data)
        assert np.allclose(back.vertices, tetra.vertices)
        assert np.array_equal(back.faces, tetra.faces)
        assert np.allclose(back.colors, tetra.colors)

    def test_one_based_indices(self, tetra):
        text = mesh_to_obj(tetra).decode()
        first_face = [l for l in text.splitlines() if l.startswith("f ")][0]
        assert first_face == "f 1 3 2"

    def test_round_trip_without_colors(self):
        mesh = TriangleMesh(vertices=np.eye(3), faces=np.array([[0, 1, 2]]))
        back = mesh_from_obj(mesh_to_obj(mesh))
        assert back.colors is None
        assert np.allclose(back.vertices, mesh.vertices)

    def test_invalid_face_index_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            mesh_from_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")

    def test_malformed_vertex_rejected(self):
        with pytest.raises(ValueError, match="malformed"):
            mesh_from_obj(b"v 0 0\nf 1 1 1\n")

    def test_serialization_stable(self, tetra):
        assert mesh_to_obj(tetra) == mesh_to_obj(tetra)

    def test_euler_characteristic_of_tetra(self, tetra):
        assert tetra.euler_characteristic() == 2


class TestPly:
    def test_header_and_rows(self):
        cloud = PointCloud(points=np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
        text = cloud_to_ply(cloud).decode()
        lines = text.splitlines()
        assert lines[0] == "ply"
        assert "element vertex 2" in text
        assert lines[-1] == "4 5 6"

    def test_normals_included(self):
        cloud = PointCloud(
            points=np.array([[0.0, 0.0, 0.0]]), normals=np.array([[0.0, 0.0, 1.0]])
        )
        text = cloud_to_ply(cloud).decode()
        assert "property double nz" in text
        assert text.splitlines()[-1] == "0 0 0 0 0 1"

    def test_nonfinite_points_rejected(self):
        with pytest.raises(ValueError):
            PointCloud(points=np.array([[np.nan, 0, 0]]))
