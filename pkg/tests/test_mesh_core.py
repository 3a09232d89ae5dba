import math
from fractions import Fraction

import numpy as np
import pytest

from abelquad import shapes
from abelquad.errors import (DegenerateTriangleError, EmptyMeshError, MeshError, NonManifoldError,
                             OrientationError, TopologyError, UnsupportedFaceDegree)
from abelquad.mesh_core import (Divisor, Mesh, MetricMesh, divisor_of_quad_mesh, embedded_metric,
                                gauss_bonnet_report, load_mesh, quad_metric, save_obj)


# -- construction and validation --------------------------------------------------

def test_cube_counts():
    m = shapes.cube()
    assert (m.n_vertices, m.n_edges, m.n_faces) == (8, 12, 6)
    assert m.euler_characteristic == 2 and m.genus == 0
    assert m.is_closed and m.is_quad and not m.is_triangle


def test_torus_and_origami_topology(torus16, origami3):
    assert torus16.euler_characteristic == 0 and torus16.genus == 1
    assert origami3.euler_characteristic == -2 and origami3.genus == 2
    assert sorted(set(origami3.valences())) == [4, 12]


def test_pentagon_rejected():
    with pytest.raises(UnsupportedFaceDegree):
        Mesh([(0, 1, 2, 3, 4)])


def test_non_manifold_edge():
    with pytest.raises(NonManifoldError):
        Mesh([(0, 1, 2), (1, 0, 3), (0, 1, 4)])


def test_mixed_orientation():
    with pytest.raises(OrientationError):
        Mesh([(0, 1, 2), (0, 1, 3)])


def test_empty_and_disconnected():
    with pytest.raises(EmptyMeshError):
        Mesh([])
    with pytest.raises(MeshError, match="not connected"):
        Mesh([(0, 1, 2), (3, 4, 5)])


def test_unreferenced_vertex():
    with pytest.raises(MeshError, match="not referenced"):
        Mesh([(0, 1, 2)], positions=np.zeros((4, 3)))


def test_bowtie_vertex_is_non_manifold():
    with pytest.raises(NonManifoldError):
        Mesh([(0, 1, 2), (0, 3, 4)])


# -- queries -------------------------------------------------------------------------

def test_halfedge_structure_consistent(origami3):
    m = origami3
    h = np.arange(m.n_halfedges)
    assert np.all(m.he_next[m.he_prev] == h)
    tw = m.he_twin
    assert np.all(tw[tw] == h)
    assert np.all(m.he_origin[tw] == m.he_dest)
    assert np.all(m.he_edge[tw] == m.he_edge)


def test_outgoing_is_counter_clockwise():
    m = shapes.rectangle_grid(4, 4)
    v = 12  # interior vertex (2, 2)
    p = m.positions
    ang = [math.atan2(*(p[m.he_dest[h]] - p[v])[[1, 0]]) for h in m.outgoing(v)]
    steps = np.mod(np.diff(ang + ang[:1]), 2 * math.pi)
    assert np.allclose(steps, math.pi / 2)


def test_boundary_loop_is_ccw():
    m = shapes.rectangle_grid(5, 3)
    (loop,) = m.boundary_loops()
    assert len(loop) == 2 * (5 + 3)
    xy = m.positions[loop][:, :2]
    area = 0.5 * np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
    assert area == pytest.approx(1.0)


def test_triangulated_uses_corner_0_2_diagonal():
    m = Mesh([(0, 1, 2, 3)], positions=[(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)])
    tris, parent = m.triangulated()
    assert tris == [(0, 1, 2), (0, 2, 3)]
    assert list(parent) == [0, 0]


# -- OBJ -------------------------------------------------------------------------------

def test_obj_round_trip(tmp_path, origami3):
    path = tmp_path / "g2.obj"
    save_obj(origami3, path)
    back = load_mesh(path)
    assert back.faces == origami3.faces
    assert np.array_equal(back.positions, origami3.positions)


def test_obj_parses_slashes_and_negative_indices(tmp_path):
    path = tmp_path / "q.obj"
    path.write_text("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf -4/1 -3/1/1 3//1 4\n")
    m = load_mesh(path)
    assert m.faces == ((0, 1, 2, 3),)


def test_obj_corner_uv(tmp_path):
    m = Mesh([(0, 1, 2)], positions=[(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    path = tmp_path / "t.obj"
    save_obj(m, path, uv=np.array([[0.5, 0.25], [1, 0], [0, 1]]), corner_uv=np.array([0, 1, 2]))
    text = path.read_text().splitlines()
    assert "vt 0.5 0.25" in text
    assert text[-1] == "f 1/1 2/2 3/3"


def test_load_empty_file(tmp_path):
    path = tmp_path / "e.obj"
    path.write_text("# nothing\n")
    with pytest.raises(EmptyMeshError):
        load_mesh(path)


# -- divisors -----------------------------------------------------------------------

def test_divisor_algebra_and_json():
    d = Divisor([(3, 2), (5, -1), (3, -2), (1j, 1)])
    assert d.entries == [(5, -1), (1j, 1)]
    assert d.degree == 0
    e = 2 * d - Divisor([(5, -2)])
    assert e.entries == [(1j, 2)]
    assert Divisor.from_json(d.to_json()) == d


def test_quad_divisors(torus16, origami3):
    cube = shapes.cube()
    dc = divisor_of_quad_mesh(cube)
    assert dc.degree == -8 and all(n == -1 for _, n in dc.entries)
    assert divisor_of_quad_mesh(torus16).degree == 0
    dg = divisor_of_quad_mesh(origami3)
    assert dg.entries == [(int(np.argmax(origami3.valences())), 8)]


@pytest.mark.parametrize("mesh", [shapes.cube(), shapes.torus_grid(5), shapes.origami(n=3)])
def test_gauss_bonnet(mesh):
    rep = gauss_bonnet_report(mesh)
    assert rep["ok"] and rep["lhs"] == 8 * mesh.genus - 8


def test_divisor_requires_closed_quad():
    with pytest.raises(TopologyError):
        divisor_of_quad_mesh(shapes.rectangle_grid(2, 2))
    with pytest.raises(MeshError):
        divisor_of_quad_mesh(shapes.torus_grid(4, triangles=True))


# -- metrics ----------------------------------------------------------------------------

def test_quad_metric_angles_and_weights(torus16):
    m = quad_metric(torus16)
    assert m.law_of_cosines_residual() < 1e-14
    assert np.allclose(m.cone_angle(), 2 * math.pi)
    w = m.cotan_weights()
    ev = m.tri.edge_vertices
    diag = np.array([not torus16.has_halfedge(int(u), int(v)) and not torus16.has_halfedge(int(v), int(u))
                     for u, v in ev])
    # right-angle corners face the diagonals, 45-degree corners face the sides
    assert np.allclose(w[diag], 0, atol=1e-15)
    assert np.allclose(w[~diag], 1)


def test_exact_cone_angles(origami3):
    m = quad_metric(origami3)
    v = int(np.argmax(origami3.valences()))
    assert m.cone_angle_exact(v) == Fraction(6)
    assert m.curvature_exact(v) == Fraction(-4)
    assert m.cone_angle(v) == pytest.approx(6 * math.pi, abs=1e-12)


def test_degenerate_triangle():
    tri = Mesh([(0, 1, 2)])
    with pytest.raises(DegenerateTriangleError) as info:
        MetricMesh(tri, tri, np.array([0]), np.array([1.0, 1.0, 4.0]))
    assert info.value.triangle == 0


def test_embedded_metric_matches_positions():
    m = shapes.rectangle_grid(3, 2, width=3, height=2)
    em = embedded_metric(m)
    assert em.tri_area.sum() == pytest.approx(6.0)
    interior = [v for v in range(m.n_vertices) if not m.is_boundary_vertex(v)]
    assert np.allclose(em.cone_angle()[interior], 2 * math.pi)
