"""Randomised invariants (hypothesis, at least 20 configurations each)."""

import math

import numpy as np
import scipy.sparse as sp
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import dijkstra

from abelquad import shapes
from abelquad.abel_jacobi import disk_potential, lattice_reduce, period_matrices
from abelquad.hodge import harmonic_basis, holomorphic_basis
from abelquad.homology import homology_basis, slice_mesh, standard_symplectic, symplectic_reduce
from abelquad.mesh_core import divisor_of_quad_mesh, quad_metric
from abelquad.quartic import _continue_branch, build_rational_quartic

PROFILE = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _transitive(right, up):
    seen, stack = {0}, [0]
    while stack:
        x = stack.pop()
        for y in (right[x], up[x]):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(right)


@st.composite
def origamis(draw, max_squares=5):
    ns = draw(st.integers(1, max_squares))
    right = tuple(draw(st.permutations(range(ns))))
    up = tuple(draw(st.permutations(range(ns))))
    assume(_transitive(right, up))
    return shapes.origami(right, up, n=draw(st.integers(3, 4)))


_cache = {}


def _solve(mesh):
    key = (mesh.faces, mesh.n_vertices)
    if key not in _cache:
        metric = quad_metric(mesh)
        basis = homology_basis(mesh)
        harm = harmonic_basis(metric, basis)
        _cache[key] = (basis, harm, holomorphic_basis(harm, metric, basis))
    return _cache[key]


@PROFILE
@given(origamis())
def test_canonical_basis_is_exactly_symplectic(mesh):
    basis, _, _ = _solve(mesh)
    assert basis.genus == mesh.genus >= 1
    assert np.array_equal(basis.intersections, standard_symplectic(mesh.genus))
    assert divisor_of_quad_mesh(mesh).degree == 8 * mesh.genus - 8


@PROFILE
@given(st.integers(1, 4), st.data())
def test_symplectic_reduce_random_unimodular(g, data):
    # random unimodular change of basis: product of elementary row operations
    n = 2 * g
    p = np.eye(n, dtype=np.int64)
    for _ in range(data.draw(st.integers(1, 12))):
        i, j = data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
        p[i] += data.draw(st.integers(-3, 3)) * p[j]
    if data.draw(st.booleans()):
        p = p[::-1]
    inter = p @ standard_symplectic(g) @ p.T
    q = symplectic_reduce(inter)
    assert np.array_equal(q @ inter @ q.T, standard_symplectic(g))
    assert round(abs(np.linalg.det(q))) == 1


@PROFILE
@given(origamis())
def test_harmonic_forms_closed_and_coclosed(mesh):
    _, harm, holo = _solve(mesh)
    for eta in harm:
        assert eta.closedness_residual() < 1e-9
        assert eta.divergence_residual() < 1e-8
    for w in holo.forms:
        assert w.closedness_residual() < 1e-9
        assert w.divergence_residual() < 1e-8


@PROFILE
@given(origamis(), st.integers(0, 2 ** 32 - 1))
def test_abel_jacobi_path_independent(mesh, seed):
    basis, _, holo = _solve(mesh)
    sliced = slice_mesh(mesh, basis)
    pot = disk_potential(holo, sliced)
    disk = sliced.disk
    rng = np.random.default_rng(seed)
    # a second path system: shortest paths for random positive edge weights
    ev = disk.edge_vertices
    wgt = rng.uniform(0.1, 1.0, len(ev))
    graph = sp.coo_matrix((np.concatenate([wgt, wgt]), (np.concatenate([ev[:, 0], ev[:, 1]]),
                                                       np.concatenate([ev[:, 1], ev[:, 0]]))),
                          shape=(disk.n_vertices,) * 2).tocsr()
    start = sliced.disk_vertex(0)
    _, pred = dijkstra(graph, indices=start, return_predecessors=True)
    tri, vals, to_orig = holo.metric.tri, holo.values(), sliced.to_original
    for target in rng.choice(disk.n_vertices, size=5, replace=False):
        acc, x = np.zeros(holo.genus, complex), int(target)
        while x != start:
            y = int(pred[x])
            u, v = int(to_orig[y]), int(to_orig[x])
            e = tri.edge_id(u, v)
            acc += vals[:, e] if tri.edge_vertices[e, 0] == u else -vals[:, e]
            x = y
        assert np.abs(acc - pot[target]).max() < 1e-9


@PROFILE
@given(origamis(), st.lists(st.floats(-50, 50), min_size=8, max_size=8))
def test_lattice_reconstruction(mesh, coeffs):
    basis, _, holo = _solve(mesh)
    per = period_matrices(holo, basis)
    g = holo.genus
    coeffs = np.array(coeffs)
    v = per.A.T @ coeffs[:g] + per.B.T @ coeffs[4:4 + g]
    alpha, beta = lattice_reduce(v, per)
    assert np.abs(v - per.A.T @ alpha - per.B.T @ beta).max() < 1e-6
    assert np.abs(per.tau - per.tau.T).max() < 1e-9


points = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@PROFILE
@given(st.lists(points, min_size=1, max_size=5, unique=True), st.lists(points, min_size=1, max_size=5),
       st.lists(st.integers(1, 3), min_size=5, max_size=5))
def test_fourth_root_branch(sing, probes, mults):
    assume(min(abs(a - b) for i, a in enumerate(sing) for b in sing[:i]) > 1e-3 if len(sing) > 1 else True)
    rq = build_rational_quartic(poles=[(p, m) for p, m in zip(sing, mults)])
    z = np.array(probes)
    assume(np.all(np.abs(z[:, None] - np.array(sing)[None, :]) > 1e-2))
    f = rq(z)
    h = rq.root(z)
    assert np.allclose(h ** 4, f, rtol=1e-10)
    # continuing from any nearby value picks the closest of the four roots
    prev = h * np.exp(1j * np.linspace(-0.7, 0.7, len(z)))
    cont = _continue_branch(prev, h)
    assert np.allclose(cont ** 4, f, rtol=1e-10)
    assert np.all(np.abs(np.angle(cont / prev)) <= math.pi / 4 + 1e-12)
