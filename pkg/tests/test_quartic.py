import math

import numpy as np
import pytest

from abelquad import shapes
from abelquad.errors import BranchTear, SingularityError, TopologyError
from abelquad.mesh_core import load_mesh
from abelquad.quartic import (CutGraph, build_rational_quartic, conformal_flatten, export_obj_with_uv,
                              integrate_fourth_root, load_singularities, singular_cut_graph,
                              snap_singularities)

from conftest import (TABLE1_POLES, TABLE2_POLES, TABLE2_ZEROS, TABLE3_POLES, TABLE4_POLES,
                      TABLE4_ZEROS, singular_json)


# -- rational quartics -------------------------------------------------------------

def test_table_configurations_validate():
    assert build_rational_quartic(poles=TABLE1_POLES).degree == -6
    assert build_rational_quartic(TABLE2_ZEROS, TABLE2_POLES).degree == -2
    assert build_rational_quartic(poles=TABLE3_POLES, sphere=True).is_balanced
    assert build_rational_quartic(TABLE4_ZEROS, TABLE4_POLES, sphere=True).is_balanced


def test_evaluation_and_root():
    rq = build_rational_quartic(zeros=[(1j, 2)], poles=[0.5])
    z = np.array([2.0 + 1j, -0.3j])
    assert np.allclose(rq(z), (z - 1j) ** 2 / (z - 0.5))
    assert np.allclose(rq.root(z) ** 4, rq(z))
    assert build_rational_quartic()(np.array([3 + 4j]))[0] == 1


def test_input_formats_agree():
    a = build_rational_quartic(poles=[0.5 + 0.25j])
    b = build_rational_quartic(poles=[(0.5 + 0.25j, 1)])
    c = load_singularities({"poles": [{"re": 0.5, "im": 0.25, "mult": 1}]})
    assert a == b == c
    assert load_singularities(a.to_json()) == a


@pytest.mark.parametrize("zeros,poles,sphere", [
    ([0.1], [0.1], False),                 # coincident zero and pole
    ([], [0.2, 0.2], False),               # coincident poles
    ([], [(0.0, 4)], False),               # non-integrable pole
    ([], TABLE1_POLES, True),              # unbalanced on the sphere
    ([(0.3, 0)], [], False),               # zero multiplicity
])
def test_invalid_configurations(zeros, poles, sphere):
    with pytest.raises(SingularityError):
        build_rational_quartic(zeros, poles, sphere=sphere)


# -- conformal charts -------------------------------------------------------------

def test_planar_disk_is_its_own_chart():
    m = shapes.uniform_disk(8)
    chart = conformal_flatten(m)
    assert chart.domain == "planar"
    assert np.array_equal(chart.z, m.positions[:, 0] + 1j * m.positions[:, 1])
    assert abs(chart.conformal_energy()) < 1e-12


def test_harmonic_disk_chart():
    m = shapes.uniform_disk(10)
    chart = conformal_flatten(m, keep_planar=False)
    assert chart.domain == "disk"
    (loop,) = m.boundary_loops()
    assert np.allclose(np.abs(chart.z[loop]), 1, atol=1e-6)
    assert abs(chart.conformal_energy()) < 1e-8
    assert chart.flipped_count() == 0


def test_hemisphere_angle_distortion():
    chart = conformal_flatten(shapes.hemisphere(20))
    assert chart.domain == "disk"
    assert math.degrees(np.median(chart.angle_distortion())) < 2


def _cross_ratio_error(chart, rng, n=400):
    p = chart.mesh.positions
    ok = p[:, 2] > -0.9
    ref = np.where(ok, p[:, 0] + 1j * p[:, 1], 0) / np.where(ok, 1 + p[:, 2], 1)
    ok[list(chart.mesh.faces[chart.punctured_face])] = False
    idx = np.flatnonzero(ok)
    q = np.array([rng.choice(idx, 4, replace=False) for _ in range(n)])

    def cr(z):
        a, b, c, d = (z[q[:, i]] for i in range(4))
        return (a - c) * (b - d) / ((a - d) * (b - c))

    return float(np.median(np.abs(cr(chart.z) - cr(ref)) / np.abs(cr(ref))))


def test_sphere_chart_is_stereographic(rng):
    errs = []
    for level in (3, 4):
        chart = conformal_flatten(shapes.icosphere(level))
        assert chart.domain == "plane" and chart.punctured_face == 0
        assert chart.flipped_count() == 0
        # stored sphere image inverts the chart exactly
        s = chart.sphere
        assert np.allclose(np.linalg.norm(s, axis=1), 1)
        back = (s[:, 0] + 1j * s[:, 1]) / (1 - s[:, 2])
        assert np.allclose(back, chart.z, rtol=1e-12, atol=1e-12)
        errs.append(_cross_ratio_error(chart, rng))
    assert errs[1] < errs[0] and errs[1] < 0.03


def test_flatten_rejects_torus():
    with pytest.raises(TopologyError):
        conformal_flatten(shapes.torus_grid(6))


# -- cut graphs -------------------------------------------------------------------

def _is_tree(cut, work):
    ev = work.edge_vertices[cut.edges]
    verts = np.unique(ev)
    if len(cut.edges) != len(verts) - 1:
        return False
    parent = {int(v): int(v) for v in verts}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v in ev:
        parent[find(int(u))] = find(int(v))
    return len({find(int(v)) for v in verts}) == 1


def test_single_pole_cut_reaches_boundary():
    chart = conformal_flatten(shapes.uniform_disk(20))
    cut = singular_cut_graph(chart, build_rational_quartic(poles=[0.3 + 0.2j]))
    assert cut.boundary_vertex is not None
    assert chart.work.is_boundary_vertex(cut.boundary_vertex)
    assert _is_tree(cut, chart.work)
    verts, deg = np.unique(chart.work.edge_vertices[cut.edges], return_counts=True)
    ends = set(verts[deg == 1].tolist())
    assert ends == {int(cut.vertices[0]), cut.boundary_vertex}


def test_no_singularities_gives_empty_cut():
    chart = conformal_flatten(shapes.uniform_disk(6))
    cut = singular_cut_graph(chart, build_rational_quartic())
    assert len(cut.edges) == 0 and cut.boundary_vertex is None


def test_table1_cut_is_a_tree():
    chart = conformal_flatten(shapes.uniform_disk(30))
    rq = build_rational_quartic(poles=TABLE1_POLES)
    cut = singular_cut_graph(chart, rq)
    assert _is_tree(cut, chart.work)
    ev = chart.work.edge_vertices[cut.edges]
    assert set(cut.vertices.tolist()) <= set(ev.ravel().tolist())
    bnd = [v for v in np.unique(ev) if chart.work.is_boundary_vertex(int(v))]
    assert bnd == [cut.boundary_vertex]
    assert cut.snap_distance.max() < 1 / 30


def test_snap_clash_and_boundary_pole():
    chart = conformal_flatten(shapes.uniform_disk(4))
    with pytest.raises(SingularityError):
        snap_singularities(chart, build_rational_quartic(poles=[0.01, 0.02]))
    with pytest.raises(SingularityError):
        singular_cut_graph(chart, build_rational_quartic(poles=[0.999]))


def test_quad_cut_avoids_diagonals():
    m = shapes.rectangle_grid(12, 12, width=2, height=2, origin=(-1, -1))
    chart = conformal_flatten(m)
    cut = singular_cut_graph(chart, build_rational_quartic(poles=[0.1 + 0.3j, -0.4j]))
    for u, v in chart.work.edge_vertices[cut.edges]:
        assert m.has_halfedge(int(u), int(v)) or m.has_halfedge(int(v), int(u))


# -- integration ------------------------------------------------------------------

def test_missing_cut_tears():
    chart = conformal_flatten(shapes.uniform_disk(16))
    rq = build_rational_quartic(poles=[0.2 + 0.1j])
    full = singular_cut_graph(chart, rq)
    empty = CutGraph(np.zeros(0, dtype=np.int64), full.vertices, full.orders, full.snap_distance)
    with pytest.raises(BranchTear) as info:
        integrate_fourth_root(chart, rq, empty)
    assert info.value.edge is not None


@pytest.mark.parametrize("k", [-3, -1, 2])
def test_cone_angles(graded_disk, k):
    chart = conformal_flatten(graded_disk)
    rq = build_rational_quartic(**({"zeros": [(0j, k)]} if k > 0 else {"poles": [(0j, -k)]}))
    atlas = integrate_fourth_root(chart, rq)
    (cone,) = atlas.cone_angles
    assert cone.vertex == 0 and cone.complete
    assert cone.expected == pytest.approx((k + 4) * math.pi / 2)
    assert cone.relative_error < 1e-9
    assert atlas.max_transition_error_deg() < 1e-6


def test_root_branch_and_paths_consistent():
    chart = conformal_flatten(shapes.uniform_disk(30))
    rq = build_rational_quartic(TABLE2_ZEROS, TABLE2_POLES)
    atlas = integrate_fourth_root(chart, rq)
    zd = chart.z[atlas.disk_to_original()]
    with np.errstate(divide="ignore", invalid="ignore"):
        f = atlas.quartic(zd)
    reg = np.isfinite(atlas.h_disk) & (np.abs(f) > 0)
    assert np.all(np.abs(atlas.h_disk[reg] ** 4 - f[reg]) < 1e-9 * np.abs(f[reg]))
    assert atlas.path_residual < 1e-6
    assert atlas.max_transition_error_deg() < 1e-3
    assert all(t.scale_error < 1e-5 for t in atlas.transitions)


@pytest.mark.parametrize("triangles", [False, True])
def test_flat_rectangle_texture_is_affine(tmp_path, triangles):
    m = shapes.rectangle_grid(6, 4, width=3, height=2, triangles=triangles)
    chart = conformal_flatten(m)
    atlas = integrate_fourth_root(chart, build_rational_quartic())
    w = atlas.original_corner_w()
    z = chart.z[m.he_origin]
    assert np.abs(w - z - (w[0] - z[0])).max() < 1e-12
    path = export_obj_with_uv(m, atlas, tmp_path / "r.obj", checker_scale=4.0)
    vt = np.array([[float(x) for x in ln.split()[1:]] for ln in path.read_text().splitlines()
                   if ln.startswith("vt ")])
    assert len(vt) == m.n_halfedges
    xy = m.positions[m.he_origin, :2] * 4
    assert np.abs(vt - xy - (vt[0] - xy[0])).max() < 1e-9


def test_exported_obj_round_trip(tmp_path):
    m = shapes.uniform_disk(12)
    chart = conformal_flatten(m)
    rq = build_rational_quartic(poles=[0.31 + 0.12j])
    atlas = integrate_fourth_root(chart, rq)
    path = export_obj_with_uv(m, atlas, tmp_path / "d.obj")
    back = load_mesh(path)
    assert back.faces == m.faces
    # corners of a vertex away from the cut share one texture coordinate
    w = atlas.original_corner_w()
    cut_verts = set(chart.work.edge_vertices[atlas.cut.edges].ravel().tolist())
    for v in range(m.n_vertices):
        if v in cut_verts:
            continue
        hs = list(m.outgoing(v))
        assert np.abs(w[hs] - w[hs[0]]).max() < 1e-12


def test_sphere_table3():
    chart = conformal_flatten(shapes.icosphere(4))
    rq = build_rational_quartic(poles=TABLE3_POLES, sphere=True)
    atlas = integrate_fourth_root(chart, rq)
    assert atlas.branch_tears == 0
    assert atlas.max_transition_error_deg() < 0.1
    assert len(atlas.cone_angles) == 8
    assert all(abs(c.measured - math.pi * 1.5) / (1.5 * math.pi) < 0.1 for c in atlas.cone_angles)


def test_load_singularities_file(tmp_path):
    import json
    path = tmp_path / "s.json"
    path.write_text(json.dumps(singular_json(TABLE4_ZEROS, TABLE4_POLES)))
    rq = load_singularities(path, sphere=True)
    assert rq.degree == -8 and len(rq.singularities) == 12
