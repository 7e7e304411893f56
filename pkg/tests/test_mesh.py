import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deformlab.mesh import (
    ConnectivityError,
    DegenerateFaceError,
    MeshError,
    ObjParseError,
    TriMesh,
    generate_bar,
    generate_cylinder_map,
    generate_fold,
    generate_grid,
    generate_icosphere,
    load_obj,
    save_obj,
    signed_volume,
)


def edge_lengths(positions, mesh):
    e = mesh.edges
    return np.linalg.norm(positions[e[:, 0]] - positions[e[:, 1]], axis=1)


class TestTriMeshCore:
    def test_halfedge_twin_involution(self):
        for mesh in (generate_grid(4), generate_icosphere(1), generate_bar(2, 1, 3)):
            t = mesh.twin
            has = t >= 0
            assert np.array_equal(t[t[has]], np.arange(len(t))[has])
            # a twin runs the shared edge backwards
            assert np.array_equal(mesh.he_src[t[has]], mesh.he_dst[has])
            assert np.array_equal(mesh.he_dst[t[has]], mesh.he_src[has])

    def test_next_cubed_is_identity(self):
        mesh = generate_grid(3)
        h = np.arange(3 * mesh.n_faces)
        nxt = mesh.next_halfedge(h)
        assert np.array_equal(mesh.next_halfedge(mesh.next_halfedge(nxt)), h)
        # next stays within the face and chains dst -> src
        assert np.array_equal(mesh.he_src[nxt], mesh.he_dst[h])

    def test_duplicate_directed_edge_rejected(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
        with pytest.raises(ConnectivityError):
            TriMesh(verts, [[0, 1, 2], [0, 1, 3]])

    def test_out_of_range_face_rejected(self):
        with pytest.raises(MeshError):
            TriMesh(np.zeros((3, 3)), [[0, 1, 5]])

    def test_repeated_vertex_in_face_rejected(self):
        with pytest.raises(MeshError):
            TriMesh(np.eye(3), [[0, 1, 1]])

    def test_degenerate_face_rejected(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], float)
        with pytest.raises(DegenerateFaceError):
            TriMesh(verts, [[0, 1, 2]])

    def test_boundary_flags(self):
        g = generate_grid(3)
        onb = (np.isclose(g.vertices[:, 0], 0) | np.isclose(g.vertices[:, 0], 1)
               | np.isclose(g.vertices[:, 1], 0) | np.isclose(g.vertices[:, 1], 1))
        assert np.array_equal(g.boundary_vertex, onb)
        assert not generate_icosphere(1).boundary_vertex.any()


class TestObjIO:
    def test_minimal_mesh(self):
        m = load_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        assert m.n_vertices == 3 and m.n_faces == 1

    def test_out_of_range_index_reports_line(self):
        with pytest.raises(ObjParseError) as err:
            load_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
        assert err.value.line == 4

    def test_quad_fan_triangulation(self):
        m = load_obj(b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        assert m.n_faces == 2
        assert np.array_equal(m.faces, [[0, 1, 2], [0, 2, 3]])

    def test_malformed_vertex(self):
        with pytest.raises(ObjParseError):
            load_obj(b"v 0 zero 0\n")

    def test_comments_and_unknown_records_ignored(self):
        data = b"# header\nvn 0 0 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\ns off\nf 1//1 2//1 3//1\n"
        m = load_obj(data)
        assert m.n_faces == 1

    def test_round_trip_grid(self):
        mesh = generate_grid(5, width=2.5)
        back = load_obj(save_obj(mesh))
        assert np.array_equal(back.faces, mesh.faces)
        np.testing.assert_allclose(back.vertices, mesh.vertices, rtol=1e-9, atol=0)

    def test_round_trip_deformed_state(self):
        mesh = generate_grid(4)
        state = generate_fold(4, angle=1.0)
        back = load_obj(save_obj(mesh, state))
        np.testing.assert_allclose(back.vertices, state, rtol=1e-9, atol=1e-15)

    def test_non_finite_rejected(self):
        mesh = generate_grid(2)
        bad = mesh.vertices.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            save_obj(mesh, bad)

    def test_state_length_mismatch(self):
        with pytest.raises(ValueError):
            save_obj(generate_grid(2), np.zeros((4, 3)))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 5), st.floats(0.1, 50.0))
    def test_round_trip_random_grids(self, n, width):
        mesh = generate_grid(n, width=width)
        back = load_obj(save_obj(mesh))
        assert np.array_equal(back.faces, mesh.faces)
        np.testing.assert_allclose(back.vertices, mesh.vertices, rtol=1e-9, atol=0)


class TestGrid:
    @pytest.mark.parametrize("n,tris", [(10, 200), (20, 800), (1, 2)])
    def test_counts(self, n, tris):
        g = generate_grid(n)
        assert g.n_faces == tris
        assert g.n_vertices == (n + 1) ** 2

    def test_zero_resolution_rejected(self):
        with pytest.raises(ValueError):
            generate_grid(0)

    def test_planar_extent(self):
        g = generate_grid(4, width=3.0)
        assert np.all(g.vertices[:, 2] == 0)
        assert g.vertices[:, 0].max() == pytest.approx(3.0)
        assert g.surface_area == pytest.approx(9.0)

    def test_alternating_same_counts_and_area(self):
        g = generate_grid(5, alternating=True)
        assert g.n_faces == 50
        assert g.surface_area == pytest.approx(1.0)
        # checkerboard flips produce both diagonal directions
        diag = g.vertices[g.faces[:, 1]] - g.vertices[g.faces[:, 0]]
        assert len(np.unique(np.round(diag, 12), axis=0)) > 2

    def test_ccw_seen_from_plus_z(self):
        g = generate_grid(3, alternating=True)
        p = g.vertices[g.faces]
        normal_z = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])[:, 2]
        assert np.all(normal_z > 0)


class TestFold:
    def test_zero_angle_is_identity(self):
        np.testing.assert_array_equal(generate_fold(4, angle=0.0), generate_grid(4).vertices)

    def test_flat_fold_reflects(self):
        rest = generate_grid(10).vertices
        pos = generate_fold(10, angle=math.pi)
        moved = rest[:, 0] > 0.5
        np.testing.assert_allclose(pos[moved, 0], 1.0 - rest[moved, 0], atol=1e-12)
        np.testing.assert_allclose(pos[:, 2], 0.0, atol=1e-12)

    def test_quarter_fold_is_isometry(self):
        mesh = generate_grid(6)
        pos = generate_fold(6, angle=math.pi / 2)
        np.testing.assert_allclose(
            edge_lengths(pos, mesh), edge_lengths(mesh.vertices, mesh), atol=1e-12)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 4), st.floats(-7.0, 7.0))
    def test_any_angle_is_isometry(self, half_n, angle):
        n = 2 * half_n
        mesh = generate_grid(n)
        pos = generate_fold(n, angle=angle)
        np.testing.assert_allclose(
            edge_lengths(pos, mesh), edge_lengths(mesh.vertices, mesh), atol=1e-12)

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError):
            generate_fold(5)


class TestCylinderMap:
    def test_seam_columns_coincide(self):
        n = 8
        rest = generate_grid(n).vertices
        pos = generate_cylinder_map(n)
        left = np.isclose(rest[:, 0], 0.0)
        right = np.isclose(rest[:, 0], 1.0)
        np.testing.assert_allclose(pos[left], pos[right], atol=1e-12)

    def test_v_direction_unchanged(self):
        rest = generate_grid(6).vertices
        np.testing.assert_array_equal(generate_cylinder_map(6)[:, 1], rest[:, 1])

    def test_edge_error_second_order(self):
        # chords of the arc-length parameterization are short by O(1/n^2)
        errs = {}
        for n in (8, 16, 32):
            mesh = generate_grid(n)
            rel = np.abs(edge_lengths(generate_cylinder_map(n), mesh)
                         / edge_lengths(mesh.vertices, mesh) - 1.0)
            errs[n] = rel.max()
        assert errs[8] < 2.0 / 8**2
        assert errs[16] < errs[8] / 3.5
        assert errs[32] < errs[16] / 3.5


class TestIcosphere:
    def test_icosahedron(self):
        m = generate_icosphere(0)
        assert m.n_vertices == 12 and m.n_faces == 20

    def test_face_count_growth(self):
        assert generate_icosphere(2).n_faces == 320

    @pytest.mark.parametrize("radius", [1.0, 2.5])
    def test_vertex_norms(self, radius):
        m = generate_icosphere(2, radius=radius)
        np.testing.assert_allclose(
            np.linalg.norm(m.vertices, axis=1), radius, atol=1e-12 * radius)

    def test_closed_and_outward(self):
        m = generate_icosphere(1)
        assert not (m.twin < 0).any()
        # genus 0: V - E + F = 2
        assert m.n_vertices - len(m.edges) + m.n_faces == 2
        vol = signed_volume(m.vertices, m.faces)
        assert vol > 0
        assert vol == pytest.approx(4 * math.pi / 3, rel=0.15)

    def test_guard(self):
        with pytest.raises(ValueError):
            generate_icosphere(8)


class TestBar:
    def test_unit_counts(self):
        m = generate_bar(1, 1, 1)
        assert m.n_vertices == 8 and m.n_faces == 12

    @pytest.mark.parametrize("segs", [(1, 1, 1), (2, 3, 4), (4, 1, 6)])
    def test_euler_characteristic(self, segs):
        m = generate_bar(*segs)
        assert m.n_vertices - len(m.edges) + m.n_faces == 2
        assert not (m.twin < 0).any()

    def test_outward_volume(self):
        assert signed_volume(*(lambda m: (m.vertices, m.faces))(generate_bar(2, 2, 2))) \
            == pytest.approx(1.0)
        m = generate_bar(2, 1, 3, dims=(1.0, 2.0, 3.0))
        assert signed_volume(m.vertices, m.faces) == pytest.approx(6.0)

    def test_positivity_guard(self):
        with pytest.raises(ValueError):
            generate_bar(0, 1, 1)
