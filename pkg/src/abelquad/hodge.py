"""Discrete harmonic and holomorphic 1-forms.

All forms live on the edges of the auxiliary triangulation ``metric.tri``;
an edge value is the integral along the edge in its canonical direction
(``tri.edge_vertices[e, 0] -> tri.edge_vertices[e, 1]``).

The Hodge star of a harmonic form is obtained by rotating the constant
covector of every triangle by a quarter turn and projecting the result, in
the L2 inner product, back onto the span of the harmonic forms.  The
projected operator is then replaced by the orthogonal factor of its polar
decomposition so that it squares to exactly ``-1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularSystemError, TopologyError, ZeroOnEdgeError
from .homology import HomologyBasis, edge_chain
from .mesh_core import Divisor, MetricMesh

log = logging.getLogger(__name__)

ZERO_EDGE_RTOL = 1e-12


@dataclass
class DiscreteOneForm:
    """Edge values of a real or complex 1-form on ``metric.tri``."""

    metric: MetricMesh
    values: np.ndarray

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def halfedge_values(self):
        tri = self.metric.tri
        e = tri.he_edge
        sign = np.where(tri.he_origin == tri.edge_vertices[e, 0], 1.0, -1.0)
        return sign * self.values[e]

    def value(self, u, v):
        tri = self.metric.tri
        e = tri.edge_id(u, v)
        return self.values[e] if tri.edge_vertices[e, 0] == u else -self.values[e]

    def integrate(self, walk):
        return edge_chain(self.metric.tri, walk) @ self.values

    def closedness_residual(self):
        """Largest |sum of halfedge values| over the triangles."""
        hv = self.halfedge_values().reshape(-1, 3)
        return float(np.abs(hv.sum(axis=1)).max())

    def divergence_residual(self):
        """Largest |cotan-weighted divergence| over the vertices."""
        return float(np.abs(divergence(self.metric, self.values)).max())

    def __add__(self, other):
        return DiscreteOneForm(self.metric, self.values + other.values)

    def __mul__(self, c):
        return DiscreteOneForm(self.metric, c * self.values)

    __rmul__ = __mul__

    def to_json(self):
        """Values on every original mesh halfedge, keyed by ``"face:corner"``."""
        mesh = self.metric.mesh
        out = {}
        for h in range(mesh.n_halfedges):
            z = complex(self.value(int(mesh.he_origin[h]), int(mesh.he_dest[h])))
            out[f"{int(mesh.he_face[h])}:{int(mesh.he_corner[h])}"] = (
                [z.real, z.imag] if self.is_complex else z.real)
        return out


@dataclass
class HolomorphicFormBasis:
    """a-normalised holomorphic forms plus the data they were built from."""

    metric: MetricMesh
    basis: HomologyBasis
    forms: list
    harmonics: list
    star: np.ndarray

    @property
    def genus(self):
        return len(self.forms)

    def values(self):
        """``(g, E)`` complex array of edge values."""
        if not self.forms:
            return np.zeros((0, self.metric.tri.n_edges), dtype=complex)
        return np.array([w.values for w in self.forms])

    def a_periods(self):
        return np.array([[w.integrate(lp) for w in self.forms] for lp in self.basis.a])


# -- operators -------------------------------------------------------------------

def lift_to_triangulation(metric, form):
    """Extend edge values from the original mesh to the triangulation (closed per face)."""
    mesh, tri = metric.mesh, metric.tri
    form = np.atleast_2d(form)
    out = np.zeros((form.shape[0], tri.n_edges), dtype=form.dtype)

    def orig(u, v):
        e = mesh.edge_id(u, v)
        return form[:, e] if mesh.edge_vertices[e, 0] == u else -form[:, e]

    for e, (u, v) in enumerate(tri.edge_vertices):
        u, v = int(u), int(v)
        if mesh.has_halfedge(u, v) or mesh.has_halfedge(v, u):
            out[:, e] = orig(u, v)
        else:
            h = tri.edge_he[e]
            f = mesh.faces[metric.tri_parent[tri.he_face[h]]]
            k = f.index(u)
            mid = f[(k + 1) % 4] if f[(k + 2) % 4] == v else f[(k - 1) % 4]
            out[:, e] = orig(u, mid) + orig(mid, v)
    return out


def cotan_laplacian(metric):
    """Positive semi-definite ``L f (v) = sum_u w_uv (f_v - f_u)``."""
    tri = metric.tri
    w = metric.cotan_weights()
    i, j = tri.edge_vertices[:, 0], tri.edge_vertices[:, 1]
    n = tri.n_vertices
    off = sp.coo_matrix((np.concatenate([-w, -w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                        shape=(n, n))
    diag = sp.diags(np.bincount(np.concatenate([i, j]), weights=np.concatenate([w, w]), minlength=n))
    return (off + diag).tocsc()


def divergence(metric, values):
    """``sum_u w_vu * value(v -> u)`` at every vertex (values may be stacked)."""
    tri = metric.tri
    w = metric.cotan_weights()
    i, j = tri.edge_vertices[:, 0], tri.edge_vertices[:, 1]
    values = np.atleast_2d(values)
    n = tri.n_vertices
    out = np.zeros((values.shape[0], n), dtype=values.dtype)
    for k, x in enumerate(values):
        out[k] = (np.bincount(i, weights=(w * x).real, minlength=n)
                  - np.bincount(j, weights=(w * x).real, minlength=n))
        if np.iscomplexobj(x):
            out[k] = out[k] + 1j * (np.bincount(i, weights=(w * x).imag, minlength=n)
                                    - np.bincount(j, weights=(w * x).imag, minlength=n))
    return out if out.shape[0] > 1 else out[0]


def gradient(metric, f):
    i, j = metric.tri.edge_vertices[:, 0], metric.tri.edge_vertices[:, 1]
    return f[..., j] - f[..., i]


def solve_laplace(metric, rhs, tol=1e-10):
    """Solve ``L f = rhs`` with ``f[0] = 0`` for one or several right-hand sides."""
    lap = cotan_laplacian(metric)
    rhs = np.atleast_2d(rhs)
    try:
        lu = spla.splu(lap[1:, 1:].tocsc())
    except RuntimeError as exc:
        raise SingularSystemError(f"Laplace system is singular: {exc}") from exc
    out = np.zeros_like(rhs, dtype=float)
    scale = max(1.0, float(np.abs(rhs).max()))
    for k, b in enumerate(rhs):
        x = lu.solve(b[1:])
        r = b[1:] - lap[1:, 1:] @ x
        x += lu.solve(r)
        out[k, 1:] = x
        res = np.abs(lap @ out[k] - b).max()
        if not np.isfinite(res) or res > tol * scale * 1e3:
            raise SingularSystemError(f"Laplace solve residual {res:.3g} too large")
    return out


def harmonic_basis(metric, basis):
    """``2g`` harmonic forms; form ``m`` integrates to ``delta_km`` over basis loop ``k``."""
    if basis.genus == 0:
        return []
    if not metric.mesh.is_closed:
        raise TopologyError("harmonic_basis requires a closed mesh")
    theta = lift_to_triangulation(metric, basis.dual_cocycles().astype(float))
    div = divergence(metric, theta)
    div = np.atleast_2d(div)
    # eta = theta - df is divergence free iff L f = -div theta
    f = solve_laplace(metric, -div)
    eta = theta - gradient(metric, f)
    return [DiscreteOneForm(metric, x) for x in eta]


def _triangle_edge_values(metric, values):
    """Per-triangle values on ``(v0 -> v1, v0 -> v2)``, stacked over forms."""
    tri = metric.tri
    s = tri.face_start[:-1]
    h01, h20 = s, s + 2
    e01, e20 = tri.he_edge[h01], tri.he_edge[h20]
    sg01 = np.where(tri.he_origin[h01] == tri.edge_vertices[e01, 0], 1.0, -1.0)
    sg02 = np.where(tri.he_dest[h20] == tri.edge_vertices[e20, 0], 1.0, -1.0)
    return sg01 * values[..., e01], sg02 * values[..., e20]


def wedge_matrix(metric, forms):
    """``W[k, l] = integral of eta_k ^ eta_l`` for piecewise constant forms."""
    a, b = _triangle_edge_values(metric, forms)
    return 0.5 * (a @ b.T - b @ a.T)


def l2_gram(metric, forms):
    w = metric.cotan_weights()
    return (forms * w) @ forms.T


def star_matrix(metric, eta):
    """Matrix ``S`` with ``star(eta_k) = sum_l S[l, k] eta_l`` and ``S @ S = -1``."""
    gram = l2_gram(metric, eta)
    wedge = wedge_matrix(metric, eta)
    proj = -np.linalg.solve(gram, wedge)
    evals, evecs = np.linalg.eigh(gram)
    g_half = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
    g_ihalf = evecs @ np.diag(1 / np.sqrt(evals)) @ evecs.T
    s = g_half @ proj @ g_ihalf
    s = 0.5 * (s - s.T)
    m_evals, m_evecs = np.linalg.eigh(s.T @ s)
    if m_evals.min() <= 0:
        raise SingularSystemError("projected Hodge star is singular")
    polar = s @ m_evecs @ np.diag(1 / np.sqrt(m_evals)) @ m_evecs.T
    return g_ihalf @ polar @ g_half


def holomorphic_basis(harmonics, metric, basis):
    """a-normalised basis ``omega_1..omega_g`` built from ``eta + i star(eta)``."""
    g = basis.genus
    if g == 0:
        return HolomorphicFormBasis(metric, basis, [], [], np.zeros((0, 0)))
    eta = np.array([h.values for h in harmonics])
    star = star_matrix(metric, eta)
    star_eta = star.T @ eta
    cand = eta + 1j * star_eta
    chains = np.array([edge_chain(metric.tri, lp) for lp in basis.a])
    per = chains @ cand.T                                  # (g, 2g) complex a-periods
    system = np.vstack([per.real, per.imag])               # real 2g x 2g
    if abs(np.linalg.det(system)) < 1e-12:
        raise SingularSystemError("a-period matrix of the holomorphic candidates is singular")
    target = np.vstack([np.eye(g), np.zeros((g, g))])
    coeff = np.linalg.solve(system, target)                # (2g, g)
    omega = coeff.T @ cand
    forms = [DiscreteOneForm(metric, w) for w in omega]
    return HolomorphicFormBasis(metric, basis, forms, list(harmonics), star)


# -- zeros -------------------------------------------------------------------------

def form_zero_divisor(omega, metric=None, merge_rings=0):
    """Divisor of a discrete holomorphic 1-form.

    The index of a vertex is the winding of ``arg omega`` over its outgoing
    edges, counter-clockwise, divided by ``2 pi``, minus one.  A triangle
    whose image under ``omega`` is negatively oriented carries an extra
    ``+1`` (``-1`` in the degenerate all-straight case), which is booked on
    its sharpest corner; with that, the indices always sum to ``2g - 2``.

    Where ``|omega|`` is small compared to the discretisation error the
    indices come as clusters of cancelling +-1 entries.  ``merge_rings > 0``
    collects nonzero indices lying within that many edge rings of each other
    and books the net index on the cluster vertex with the smallest
    ``|omega|``.
    """
    metric = omega.metric if metric is None else metric
    tri = metric.tri
    if not tri.is_closed:
        raise TopologyError("form_zero_divisor requires a closed surface")
    hv = omega.halfedge_values()
    mag = np.abs(hv)
    if (mag <= ZERO_EDGE_RTOL * mag.mean()).any():
        h = int(np.argmin(mag))
        raise ZeroOnEdgeError(
            f"form vanishes on edge {tri.he_origin[h]}-{tri.he_dest[h]}; "
            "perturb the homology basis or the metric")
    ccw = tri.he_twin[tri.he_prev]
    turn = np.angle(hv[ccw] / hv)
    per_vertex = np.bincount(tri.he_origin, weights=turn, minlength=tri.n_vertices)
    index = np.rint(per_vertex / (2 * math.pi)).astype(np.int64) - 1
    face_turn = turn.reshape(-1, 3)
    s = np.rint(face_turn.sum(axis=1) / math.pi).astype(np.int64)
    extra = (1 - s) // 2
    for t in np.flatnonzero(extra):
        c = int(np.argmax(np.abs(face_turn[t])))
        index[tri.faces[t][c]] += extra[t]
    expected = -tri.euler_characteristic
    if index.sum() != expected:
        raise SingularSystemError(f"zero indices sum to {index.sum()}, expected {expected}")
    if merge_rings > 0:
        index = _merge_clusters(tri, index, mag, merge_rings)
    return Divisor((int(v), int(n)) for v, n in enumerate(index) if n)


def _merge_clusters(tri, index, mag, rings):
    size = np.bincount(tri.he_origin, weights=mag, minlength=tri.n_vertices)
    size /= np.bincount(tri.he_origin, minlength=tri.n_vertices)
    support = [int(v) for v in np.flatnonzero(index)]
    cluster = {}
    for v in support:
        if v in cluster:
            continue
        members, queue = [v], [v]
        cluster[v] = v
        while queue:
            x = queue.pop()
            # vertices within ``rings`` of x
            seen, front = {x}, [x]
            for _ in range(rings):
                front = [y for z in front for y in tri.neighbors(z) if y not in seen]
                seen.update(front)
            for y in seen:
                if index[y] and y not in cluster:
                    cluster[y] = v
                    members.append(y)
                    queue.append(y)
        net = int(index[members].sum())
        index[members] = 0
        if net:
            index[min(members, key=lambda y: (size[y], y))] = net
    return index
