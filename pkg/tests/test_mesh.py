import numpy as np
import pytest

from saucd.mesh import (
    Mesh,
    build_adjacency,
    center,
    cotangent_weights,
    face_areas,
    load_mesh,
    mesh_scale,
    mixed_voronoi_areas,
    validate,
    write_mesh,
)
from saucd.shapes import cube, icosphere, tetrahedron

from conftest import random_rotation


TETRA_OBJ = """\
v 0 0 0
v 1 1 0
v 1 0 1
v 0 1 1
f 1 3 2
f 1 4 3
f 1 2 4
f 2 3 4
"""

CUBE_PLY = """\
ply
format ascii 1.0
element vertex 8
property float x
property float y
property float z
element face 6
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
4 0 3 2 1
4 4 5 6 7
4 0 1 5 4
4 1 2 6 5
4 2 3 7 6
4 3 0 4 7
"""


class TestIO:
    def test_obj_tetrahedron(self, tmp_path):
        path = tmp_path / "tetra.obj"
        path.write_text(TETRA_OBJ)
        mesh = load_mesh(path)
        assert mesh.n_vertices == 4
        assert mesh.n_faces == 4

    def test_obj_zero_index_rejected(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
        with pytest.raises(ValueError, match="1-based"):
            load_mesh(path)

    def test_obj_out_of_range_index(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
        with pytest.raises(ValueError, match="out of range"):
            load_mesh(path)

    def test_ply_cube_fan_triangulated(self, tmp_path):
        path = tmp_path / "cube.ply"
        path.write_text(CUBE_PLY)
        mesh = load_mesh(path, triangulate=True)
        # hand count: 6 quads fan into 2 triangles each
        assert mesh.n_vertices == 8
        assert mesh.n_faces == 12
        assert validate(mesh).spectral_ready

    def test_quad_rejected_without_flag(self, tmp_path):
        path = tmp_path / "cube.ply"
        path.write_text(CUBE_PLY)
        with pytest.raises(ValueError, match="non-triangle"):
            load_mesh(path)

    @pytest.mark.parametrize("fmt", ["obj", "ply"])
    def test_roundtrip(self, tmp_path, fmt):
        mesh = icosphere(1)
        path = tmp_path / f"m.{fmt}"
        write_mesh(mesh, path)
        back = load_mesh(path)
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.faces, mesh.faces)

    def test_vertex_order_preserved(self, tmp_path):
        path = tmp_path / "t.obj"
        path.write_text(TETRA_OBJ)
        mesh = load_mesh(path)
        assert np.allclose(mesh.vertices[1], [1, 1, 0])

    def test_obj_face_with_texture_indices(self, tmp_path):
        path = tmp_path / "t.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
                        "f 1/1 2/2 3/3\nf 1/1 3/3 4/4\nf 1 4 2\nf 2 4 3\n")
        assert load_mesh(path).n_faces == 4


class TestMeshInvariants:
    def test_repeated_index_rejected(self):
        with pytest.raises(ValueError, match="repeats"):
            Mesh(np.eye(3), [[0, 1, 1]])

    def test_nan_rejected(self):
        v = np.eye(3)
        v = np.vstack([v, [np.nan, 0, 0]])
        with pytest.raises(ValueError, match="finite"):
            Mesh(v, [[0, 1, 2]])

    def test_immutable(self):
        mesh = tetrahedron()
        with pytest.raises((ValueError, AttributeError)):
            mesh.vertices[0, 0] = 5.0


class TestValidate:
    def test_tetrahedron_ready(self):
        report = validate(tetrahedron())
        assert report.nonmanifold_edges == 0
        assert report.boundary_edges == 0
        assert report.spectral_ready

    def test_single_triangle(self):
        mesh = Mesh(np.eye(3), [[0, 1, 2]])
        report = validate(mesh)
        assert report.boundary_edges == 3
        assert not report.spectral_ready  # fewer than 4 vertices

    def test_nonmanifold_edge(self):
        # two triangles sharing an edge plus a third on the same edge
        v = [[0, 0, 0], [1, 0, 0], [0.5, 1, 0], [0.5, -1, 0], [0.5, 0, 1]]
        f = [[0, 1, 2], [0, 3, 1], [0, 1, 4]]
        report = validate(Mesh(v, f))
        assert report.nonmanifold_edges == 1
        assert not report.spectral_ready

    def test_unreferenced_vertex(self):
        v = np.vstack([np.eye(3), [5, 5, 5]])
        report = validate(Mesh(v, [[0, 1, 2]]))
        assert report.unreferenced_vertices == 1


class TestScaleCenter:
    def test_unit_cube_scale(self):
        assert mesh_scale(cube()) == pytest.approx(1.0)

    def test_stretched_cube(self):
        mesh = cube().with_vertices(cube().vertices * np.array([3.0, 1.0, 1.0]))
        assert mesh_scale(mesh) == pytest.approx(3.0)

    def test_tetra_bbox(self):
        mesh = Mesh([[0, 0, 0], [1, 0, 0], [0, 2, 0], [0, 0, 0.5]],
                    [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])
        assert mesh_scale(mesh) == pytest.approx(2.0)

    def test_zero_extent_error(self):
        with pytest.raises(ValueError, match="zero extent"):
            mesh_scale(Mesh(np.zeros((4, 3)), [[0, 1, 2]]))

    def test_center_moves_centroid(self):
        mesh = tetrahedron().with_vertices(tetrahedron().vertices + [1, 1, 1])
        assert np.allclose(center(mesh).centroid(), 0.0, atol=1e-15)

    def test_center_idempotent(self):
        mesh = center(tetrahedron())
        assert np.array_equal(center(mesh).vertices, mesh.vertices)

    def test_center_random(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((100, 3)) + 7.0
        f = [[i, i + 1, i + 2] for i in range(0, 96, 3)]
        centered = center(Mesh(v, f))
        assert np.abs(centered.vertices.mean(axis=0)).max() < 1e-12


class TestMixedVoronoiAreas:
    def test_equilateral_triangle(self):
        # non-obtuse circumcentric split: each corner gets area / 3
        s3 = np.sqrt(3.0)
        mesh = Mesh([[0, 0, 0], [1, 0, 0], [0.5, s3 / 2, 0]], [[0, 1, 2]])
        areas = mixed_voronoi_areas(mesh)
        assert np.allclose(areas, (s3 / 4) / 3, atol=1e-12)

    def test_partition_property(self, fixture_meshes):
        for name, mesh in fixture_meshes.items():
            areas = mixed_voronoi_areas(mesh)
            total = face_areas(mesh).sum()
            assert abs(areas.sum() - total) <= 1e-9 * total, name
            assert (areas > 0).all(), name

    def test_partition_random(self, random_closed_meshes):
        for mesh in random_closed_meshes:
            areas = mixed_voronoi_areas(mesh)
            total = face_areas(mesh).sum()
            assert abs(areas.sum() - total) <= 1e-9 * total

    def test_obtuse_split(self):
        # 120-degree apex: obtuse corner takes half, others a quarter
        h = 0.5 / np.tan(np.pi / 3)
        mesh = Mesh([[0, 0, 0], [1, 0, 0], [0.5, h, 0]], [[0, 1, 2]])
        areas = mixed_voronoi_areas(mesh)
        total = face_areas(mesh).sum()
        assert areas[2] == pytest.approx(total / 2)
        assert areas[0] == pytest.approx(total / 4)
        assert areas[1] == pytest.approx(total / 4)

    def test_unreferenced_vertex_error(self):
        v = np.vstack([np.eye(3), [3, 3, 3]])
        with pytest.raises(ValueError, match="no incident face"):
            mixed_voronoi_areas(Mesh(v, [[0, 1, 2]]))

    def test_rotation_invariance(self, fixture_meshes):
        mesh = fixture_meshes["bumpy"]
        base = mixed_voronoi_areas(mesh)
        for seed in range(3):
            q = random_rotation(seed)
            rotated = mesh.with_vertices(mesh.vertices @ q.T)
            assert np.allclose(mixed_voronoi_areas(rotated), base, rtol=1e-9)

    def test_uniform_scale_law(self, fixture_meshes):
        mesh = fixture_meshes["hull"]
        base = mixed_voronoi_areas(mesh)
        for s in (0.1, 2.0, 10.0):
            scaled = mesh.with_vertices(mesh.vertices * s)
            assert np.allclose(mixed_voronoi_areas(scaled), base * s * s, rtol=1e-9)


class TestCotangentWeights:
    def _weight_of(self, mesh, i, j):
        adjacency = build_adjacency(mesh)
        weights = cotangent_weights(mesh, adjacency)
        for e, (a, b) in enumerate(adjacency.edges):
            if (a, b) == tuple(sorted((i, j))):
                return weights[e]
        raise AssertionError("edge not found")

    def test_two_equilateral(self):
        s3 = np.sqrt(3.0)
        mesh = Mesh(
            [[0, 0, 0], [1, 0, 0], [0.5, s3 / 2, 0], [0.5, -s3 / 2, 0]],
            [[0, 1, 2], [0, 3, 1]],
        )
        assert self._weight_of(mesh, 0, 1) == pytest.approx(2 / s3, abs=1e-12)

    def test_right_isoceles_hypotenuse(self):
        mesh = Mesh(
            [[0, 0, 0], [2, 0, 0], [1, 1, 0], [1, -1, 0]],
            [[0, 1, 2], [0, 3, 1]],
        )
        assert self._weight_of(mesh, 0, 1) == pytest.approx(0.0, abs=1e-12)

    def test_obtuse_boundary_edge(self):
        # single triangle, 120-degree angle opposite the boundary edge (0,1)
        h = 0.5 / np.tan(np.pi / 3)
        mesh = Mesh([[0, 0, 0], [1, 0, 0], [0.5, h, 0]], [[0, 1, 2]])
        expected = 1.0 / np.tan(2 * np.pi / 3)
        assert self._weight_of(mesh, 0, 1) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-0.5774, abs=1e-4)

    def test_degenerate_face_error(self):
        mesh = Mesh([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]],
                    [[0, 1, 2], [0, 1, 3]])
        with pytest.raises(ValueError, match="face 0"):
            cotangent_weights(mesh, build_adjacency(mesh))

    def test_rotation_and_scale_invariance(self, fixture_meshes):
        mesh = fixture_meshes["icosphere2"]
        adjacency = build_adjacency(mesh)
        base = cotangent_weights(mesh, adjacency)
        q = random_rotation(5)
        rotated = mesh.with_vertices(mesh.vertices @ q.T)
        assert np.allclose(cotangent_weights(rotated, adjacency), base, rtol=1e-9, atol=1e-12)
        scaled = mesh.with_vertices(mesh.vertices * 3.7)
        assert np.allclose(cotangent_weights(scaled, adjacency), base, rtol=1e-9, atol=1e-12)
