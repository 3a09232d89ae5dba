"""Genus-zero pipeline: conformal charts, rational quartic differentials and
branch-consistent integration of their fourth roots.

For ``omega = f(z) dz^4`` with ``f`` rational, ``w = int f^(1/4) dz`` maps
the chart, cut open along a tree through the singularities, to the plane.
Integer isolines of ``w`` trace the horizontal and vertical trajectories of
``omega``; a singularity of order ``k`` becomes a cone point of angle
``(k + 4) pi / 2``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import dijkstra

from .errors import BranchTear, FlippedTriangles, SingularityError, TopologyError
from .hodge import cotan_laplacian
from .homology import cut_open
from .mesh_core import Mesh, MetricMesh, embedded_metric, save_obj

log = logging.getLogger(__name__)

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
GL_NODES = 0.5 * (GL_NODES + 1)
GL_WEIGHTS = 0.5 * GL_WEIGHTS
NEAR_RINGS = 2
NEAR_SUBDIV = 4
TEAR_ANGLE = math.pi / 4


# -- conformal charts ----------------------------------------------------------

@dataclass
class ConformalChart:
    """Complex coordinate per vertex of a genus-0 mesh.

    ``work`` is the triangulation the chart lives on (the auxiliary
    triangulation of ``mesh``, minus the punctured face in the plane case);
    ``work_parent`` maps its triangles to faces of ``mesh``.
    """

    mesh: Mesh
    z: np.ndarray
    domain: str
    work: Mesh
    work_parent: np.ndarray
    punctured_face: int | None = None
    sphere: np.ndarray | None = None

    def triangle_areas(self):
        f = np.array(self.work.faces)
        a, b, c = self.z[f[:, 0]], self.z[f[:, 1]], self.z[f[:, 2]]
        return 0.5 * ((b - a).conjugate() * (c - a)).imag

    def flipped_count(self):
        return int((self.triangle_areas() <= 0).sum())

    def conformal_energy(self):
        """Dirichlet energy minus signed image area (zero for a conformal map)."""
        metric = _work_metric(self.work)
        lap = cotan_laplacian(metric)
        dirichlet = 0.5 * float((self.z.conj() @ (lap @ self.z)).real)
        return dirichlet - float(self.triangle_areas().sum())

    def angle_distortion(self):
        """Per-corner |image angle - surface angle| in radians."""
        metric = _work_metric(self.work)
        f = np.array(self.work.faces)
        img = np.empty(f.shape)
        for c in range(3):
            a, b, d = self.z[f[:, c]], self.z[f[:, (c + 1) % 3]], self.z[f[:, (c + 2) % 3]]
            img[:, c] = np.abs(np.angle((d - a) / (b - a)))
        return np.abs(img - metric.corner_angles)


def _work_metric(work):
    return MetricMesh(work, work, np.arange(work.n_faces), work.edge_lengths() ** 2)


def _solve(matrix, rhs):
    x = spla.spsolve(matrix.tocsc(), rhs)
    return np.atleast_1d(x)


def conformal_flatten(mesh, keep_planar=True):
    """Flatten a genus-0 mesh conformally.

    A disk-like mesh lying in the ``xy`` plane is its own chart when
    ``keep_planar`` is set (domain ``"planar"``).  Other
    disk-like meshes go to the unit disk: the boundary is placed on the unit
    circle by arc length, starting at the angle of its first vertex, and the
    interior is the cotan-harmonic extension (which minimises the conformal
    energy for a fixed boundary).  Closed meshes are punctured at face 0 and
    mapped to the plane by a discrete stereographic projection that sends a
    point of that face to infinity; the plane chart is normalised to mean 0
    and median radius 1 and its inverse stereographic image is stored in
    ``sphere``.
    """
    if mesh.genus != 0:
        raise TopologyError(f"conformal_flatten needs genus 0, got genus {mesh.genus}")
    loops = mesh.boundary_loops()
    if len(loops) > 1:
        raise TopologyError("conformal_flatten supports disks and spheres only")
    tris, parent = mesh.triangulated()
    if loops:
        work = Mesh(tris, positions=mesh.positions, n_vertices=mesh.n_vertices)
        pos = mesh.positions
        if keep_planar and np.ptp(pos[:, 2]) <= 1e-12 * max(1.0, float(np.ptp(pos[:, :2]))):
            chart = ConformalChart(mesh, pos[:, 0] + 1j * pos[:, 1], "planar", work, parent)
        else:
            chart = ConformalChart(mesh, _flatten_disk(work, loops[0]), "disk", work, parent)
    else:
        keep = parent != 0
        work = Mesh([t for t, k in zip(tris, keep) if k], positions=mesh.positions,
                    n_vertices=mesh.n_vertices)
        full = Mesh(tris, positions=mesh.positions, n_vertices=mesh.n_vertices)
        z = _flatten_punctured(full, tris[0])
        f = np.array(work.faces)
        img = ((z[f[:, 1]] - z[f[:, 0]]).conjugate() * (z[f[:, 2]] - z[f[:, 0]])).imag
        if (img < 0).sum() > (img > 0).sum():
            z = z.conjugate()
        z = z - z.mean()
        z = z / np.median(np.abs(z))
        r2 = np.abs(z) ** 2
        sphere = np.column_stack([2 * z.real, 2 * z.imag, r2 - 1]) / (1 + r2)[:, None]
        chart = ConformalChart(mesh, z, "plane", work, parent[keep], punctured_face=0,
                               sphere=sphere)
    flipped = chart.flipped_count()
    if flipped:
        raise FlippedTriangles(f"{flipped} triangles flipped in the conformal chart", count=flipped)
    return chart


def _flatten_disk(work, loop):
    p = work.positions
    loop = np.asarray(loop)
    seg = np.linalg.norm(p[np.roll(loop, -1)] - p[loop], axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)[:-1]]) / seg.sum()
    theta0 = math.atan2(p[loop[0], 1], p[loop[0], 0])
    zb = np.exp(1j * (theta0 + 2 * math.pi * s))
    lap = cotan_laplacian(_work_metric(work))
    n = work.n_vertices
    inner = np.setdiff1d(np.arange(n), loop)
    z = np.zeros(n, dtype=complex)
    z[loop] = zb
    if len(inner):
        rhs = -(lap[inner][:, loop] @ zb)
        a = lap[inner][:, inner]
        z[inner] = _solve(a, rhs.real) + 1j * _solve(a, rhs.imag)
    return z


def _flatten_punctured(full, tri_abc):
    """Discrete stereographic projection with the pole on edge AB of ``tri_abc``.

    Solves ``L z = b`` on the closed triangulation ``full``, where ``b`` is the discrete derivative of a point
    source at the pole, so ``z`` behaves like ``1 / (x - pole)``.
    """
    a, b, c = tri_abc
    p = full.positions
    ab = p[b] - p[a]
    theta = float(np.dot(p[c] - p[a], ab) / np.dot(ab, ab))
    e = p[a] + theta * ab
    lab, lce = float(np.linalg.norm(ab)), float(np.linalg.norm(p[c] - e))
    n = full.n_vertices
    rhs = np.zeros(n, dtype=complex)
    rhs[a] += -1 / lab + 1j * (1 - theta) / lce
    rhs[b] += 1 / lab + 1j * theta / lce
    rhs[c] += -1j / lce
    lap = cotan_laplacian(_work_metric(full))
    free = np.arange(1, n)
    a_ff = lap[free][:, free]
    z = np.zeros(n, dtype=complex)
    z[free] = _solve(a_ff, rhs[free].real) + 1j * _solve(a_ff, rhs[free].imag)
    return z


# -- rational quartic differentials ----------------------------------------------

def _parse_point(item):
    if isinstance(item, dict):
        return complex(float(item["re"]), float(item["im"])), int(item.get("mult", 1))
    if isinstance(item, (tuple, list)):
        return complex(item[0]), int(item[1])
    return complex(item), 1


@dataclass(frozen=True)
class RationalQuartic:
    """``omega = f(z) dz^4`` with ``f = prod (z - p_i)^n_i / prod (z - q_j)^m_j``."""

    zeros: tuple = ()
    poles: tuple = ()

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for p, n in self.zeros:
            out = out * (z - p) ** n
        for q, m in self.poles:
            out = out / (z - q) ** m
        return out

    def root(self, z):
        """Principal branch of ``f(z)^(1/4)``."""
        return self(z) ** 0.25

    @property
    def singularities(self):
        """``(point, order)`` pairs, zeros first; poles carry negative orders."""
        return [(p, n) for p, n in self.zeros] + [(q, -m) for q, m in self.poles]

    @property
    def degree(self):
        return sum(n for _, n in self.zeros) - sum(m for _, m in self.poles)

    @property
    def is_balanced(self):
        """True when the point at infinity is a regular point on the sphere."""
        return self.degree == -8

    def moved(self, points):
        """Same orders at new locations (in ``singularities`` order)."""
        points = list(points)
        nz = len(self.zeros)
        return RationalQuartic(
            tuple((complex(points[i]), n) for i, (_, n) in enumerate(self.zeros)),
            tuple((complex(points[nz + j]), m) for j, (_, m) in enumerate(self.poles)))

    def to_json(self):
        return {
            "zeros": [{"re": p.real, "im": p.imag, "mult": n} for p, n in self.zeros],
            "poles": [{"re": q.real, "im": q.imag, "mult": m} for q, m in self.poles],
        }


def build_rational_quartic(zeros=(), poles=(), sphere=False, tol=1e-12):
    """Validate singular points and multiplicities.

    Entries are complex numbers (multiplicity 1), ``(point, mult)`` pairs or
    ``{"re", "im", "mult"}`` dicts.  With ``sphere=True`` the orders must
    balance so that infinity is regular (pole count minus zero count = 8).
    """
    z = tuple(_parse_point(x) for x in zeros)
    p = tuple(_parse_point(x) for x in poles)
    for pt, mult in z + p:
        if mult < 1:
            raise SingularityError(f"multiplicity at {pt} must be a positive integer")
        if not (math.isfinite(pt.real) and math.isfinite(pt.imag)):
            raise SingularityError(f"singular point {pt} is not finite")
    for pt, mult in p:
        if mult >= 4:
            raise SingularityError(
                f"pole of order {mult} at {pt}: the fourth root is not integrable for orders <= -4")
    pts = [pt for pt, _ in z + p]
    scale = 1 + max((abs(x) for x in pts), default=0)
    for i in range(len(pts)):
        for j in range(i):
            if abs(pts[i] - pts[j]) <= tol * scale:
                kind = "zero and pole" if (i >= len(z)) != (j >= len(z)) else "points"
                raise SingularityError(
                    f"coincident {kind} at {pts[i]}; cancel or merge them before building")
    rq = RationalQuartic(z, p)
    if sphere and not rq.is_balanced:
        raise SingularityError(
            f"sphere mode needs poles - zeros = 8 (counted with multiplicity), got {-rq.degree}")
    return rq


def load_singularities(path_or_data, sphere=False):
    """Read ``{"zeros": [...], "poles": [...]}`` from a JSON file or dict."""
    data = path_or_data
    if isinstance(data, (str, Path)):
        data = json.loads(Path(data).read_text(encoding="utf-8"))
    return build_rational_quartic(data.get("zeros", []), data.get("poles", []), sphere=sphere)


# -- cut graph -----------------------------------------------------------------

@dataclass
class CutGraph:
    """Tree of chart edges joining the singular vertices (and one boundary vertex)."""

    edges: np.ndarray
    vertices: np.ndarray
    orders: np.ndarray
    snap_distance: np.ndarray
    boundary_vertex: int | None = None

    def mask(self, n_edges):
        m = np.zeros(n_edges, dtype=bool)
        m[self.edges] = True
        return m


def snap_singularities(chart, rq):
    """Nearest chart vertex of every singular point, with the snap distances."""
    pts = np.array([p for p, _ in rq.singularities], dtype=complex)
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    d = np.abs(chart.z[None, :] - pts[:, None])
    verts = d.argmin(axis=1)
    dist = d[np.arange(len(pts)), verts]
    uniq, counts = np.unique(verts, return_counts=True)
    if (counts > 1).any():
        v = int(uniq[counts > 1][0])
        raise SingularityError(f"several singular points snap to vertex {v}; refine the mesh")
    return verts.astype(np.int64), dist


def _original_edges(chart):
    mesh, work = chart.mesh, chart.work
    if mesh.is_triangle:
        return np.ones(work.n_edges, dtype=bool)
    return np.array([mesh.has_halfedge(int(u), int(v)) or mesh.has_halfedge(int(v), int(u))
                     for u, v in work.edge_vertices])


def _edge_graph(chart, allowed, skip_vertices=None):
    work = chart.work
    ev = work.edge_vertices
    keep = allowed.copy()
    if skip_vertices is not None:
        keep &= ~skip_vertices[ev[:, 0]] & ~skip_vertices[ev[:, 1]]
    e = np.flatnonzero(keep)
    wgt = np.abs(chart.z[ev[e, 1]] - chart.z[ev[e, 0]]) + 1e-300
    n = work.n_vertices
    g = sp.coo_matrix((np.concatenate([wgt, wgt]),
                       (np.concatenate([ev[e, 0], ev[e, 1]]), np.concatenate([ev[e, 1], ev[e, 0]]))),
                      shape=(n, n)).tocsr()
    return g


def singular_cut_graph(chart, rq):
    """Union of shortest paths joining the singular vertices, grown Prim-style.

    On a chart with boundary the first path comes from the nearest boundary
    vertex; later paths avoid the boundary so it is touched exactly once.
    Paths use edges of the original mesh only, so no face is split.
    """
    verts, dist = snap_singularities(chart, rq)
    orders = np.array([k for _, k in rq.singularities], dtype=np.int64)
    work = chart.work
    if len(verts) == 0:
        return CutGraph(np.zeros(0, dtype=np.int64), verts, orders, dist)
    allowed = _original_edges(chart)
    bnd = np.zeros(work.n_vertices, dtype=bool)
    for loop in work.boundary_loops():
        bnd[loop] = True
    has_boundary = chart.domain != "plane"
    if has_boundary and bnd[verts].any():
        v = int(verts[bnd[verts]][0])
        raise SingularityError(f"singular point snaps to boundary vertex {v}; move it inside")
    edges, in_tree = set(), np.zeros(work.n_vertices, dtype=bool)
    remaining = [int(v) for v in verts]
    boundary_vertex = None
    if has_boundary:
        sources = np.flatnonzero(bnd)
        graph = _edge_graph(chart, allowed)
    else:
        first = remaining.pop(0)
        in_tree[first] = True
        sources = np.array([first])
        graph = _edge_graph(chart, allowed)
    interior_graph = _edge_graph(chart, allowed, skip_vertices=bnd) if has_boundary else graph
    while remaining:
        d, pred, src = dijkstra(graph, indices=sources, min_only=True, return_predecessors=True)
        cand = [(d[v], v) for v in remaining]
        best_d, target = min(cand)
        if not np.isfinite(best_d):
            raise SingularityError(f"singular vertex {target} cannot be reached by the cut graph")
        remaining.remove(target)
        x = target
        while pred[x] >= 0:
            edges.add(int(work.edge_id(int(pred[x]), int(x))))
            in_tree[x] = True
            x = int(pred[x])
        in_tree[x] = True
        if has_boundary and boundary_vertex is None:
            boundary_vertex = x
            in_tree[x] = False
        in_tree[target] = True
        sources = np.flatnonzero(in_tree)
        graph = interior_graph
    return CutGraph(np.array(sorted(edges), dtype=np.int64), verts, orders, dist, boundary_vertex)


# -- integration of the fourth root ------------------------------------------------

def _continue_branch(prev, root):
    """Multiply ``root`` by the power of ``i`` that lands closest to ``prev``."""
    k = -np.rint(np.angle(root * np.conj(prev)) / (math.pi / 2))
    return root * np.exp(0.5j * math.pi * k)


def _nodes(n_sub):
    t = ((np.arange(n_sub)[:, None] + GL_NODES[None, :]) / n_sub).ravel()
    return t, np.tile(GL_WEIGHTS, n_sub) / n_sub


def _integrate_segments(rq, za, zb, h0, n_sub):
    """Integrate ``f^(1/4) dz`` along straight segments, continuing from ``h0``.

    Returns the integrals and the continued root at the end points.
    """
    t, wt = _nodes(n_sub)
    d = zb - za
    pts = za[:, None] + t[None, :] * d[:, None]
    roots = rq.root(pts)
    prev = h0
    for j in range(len(t)):
        prev = _continue_branch(prev, roots[:, j])
        roots[:, j] = prev
    h_end = _continue_branch(prev, rq.root(zb))
    return d * (roots @ wt), h_end


def _adaptive_subdivision(za, zb, spts, cap=256):
    """Sub-segments needed so each is at most half its distance to a singularity."""
    if len(spts) == 0 or len(za) == 0:
        return np.ones(len(za), dtype=np.int64)
    length = np.abs(zb - za)
    rho = np.full(len(za), np.inf)
    for s in spts:
        # distance from s to the segment
        d = zb - za
        t = np.clip(((np.conj(d) * (s - za)).real) / np.maximum(length ** 2, 1e-300), 0, 1)
        rho = np.minimum(rho, np.abs(za + t * d - s))
    n = np.ceil(2 * length / np.maximum(rho, 1e-300))
    return np.clip(n, 1, cap).astype(np.int64)


def _integrate_to_singular(rq, za, s, order, h0, n_sub=NEAR_SUBDIV):
    """Integrate from ``za`` into the singular point ``s`` of the given order.

    Uses ``z = s + (za - s) u^p`` with ``p = 4 / (order + 4)``, which turns
    the integrand into a smooth function of ``u``.
    """
    p = 4.0 / (order + 4.0)
    t, wt = _nodes(n_sub)
    u = 1.0 - t                                        # from za towards s
    d = za - s
    pts = s[:, None] + d[:, None] * u[None, :] ** p[:, None]
    roots = rq.root(pts)
    prev = h0
    for j in range(len(t)):
        prev = _continue_branch(prev, roots[:, j])
        roots[:, j] = prev
    jac = d[:, None] * p[:, None] * u[None, :] ** (p[:, None] - 1)
    return -(roots * jac) @ wt


@dataclass
class Transition:
    edge: tuple
    rotation: int
    angle_error_deg: float
    scale_error: float
    translation: complex

    def to_json(self):
        return {"edge": list(self.edge), "rotation": self.rotation,
                "angle_error_deg": self.angle_error_deg, "scale_error": self.scale_error,
                "translation": [self.translation.real, self.translation.imag]}


@dataclass
class ConeAngle:
    vertex: int
    order: int
    measured: float
    expected: float
    complete: bool = True

    @property
    def relative_error(self):
        return abs(self.measured - self.expected) / self.expected

    def to_json(self):
        return {"vertex": self.vertex, "order": self.order, "measured": self.measured,
                "expected": self.expected, "relative_error": self.relative_error,
                "complete": self.complete}


@dataclass
class UVAtlas:
    """Integrated coordinate ``w`` on the chart cut open along ``cut``.

    ``corner_w[h]`` is the value at the origin of halfedge ``h`` of
    ``chart.work``; ``branch[t]`` is the power of ``i`` relating the root used
    on triangle ``t`` to the principal root.
    """

    chart: ConformalChart
    quartic: RationalQuartic
    cut: CutGraph
    corner: np.ndarray
    disk: Mesh
    w_disk: np.ndarray
    h_disk: np.ndarray
    corner_w: np.ndarray
    branch: np.ndarray
    transitions: list = field(default_factory=list)
    cone_angles: list = field(default_factory=list)
    path_residual: float = 0.0
    branch_tears: int = 0

    def original_corner_w(self):
        """``w`` per halfedge (face corner) of the input mesh."""
        mesh, work, chart = self.chart.mesh, self.chart.work, self.chart
        key = {}
        for t in range(work.n_faces):
            f = int(chart.work_parent[t])
            for h in range(work.face_start[t], work.face_start[t] + 3):
                key[(f, int(work.he_origin[h]))] = h
        to_orig = self.disk_to_original()
        first = np.full(mesh.n_vertices, -1, dtype=np.int64)
        for dv in range(len(to_orig) - 1, -1, -1):
            first[to_orig[dv]] = dv
        out = np.empty(mesh.n_halfedges, dtype=complex)
        for h in range(mesh.n_halfedges):
            k = (int(mesh.he_face[h]), int(mesh.he_origin[h]))
            out[h] = self.corner_w[key[k]] if k in key else self.w_disk[first[k[1]]]
        return out

    def disk_to_original(self):
        out = np.empty(self.disk.n_vertices, dtype=np.int64)
        out[self.corner] = self.chart.work.he_origin
        return out

    def max_transition_error_deg(self):
        return max((t.angle_error_deg for t in self.transitions), default=0.0)

    def summary(self):
        return {
            "domain": self.chart.domain,
            "singularities": [{"vertex": int(v), "order": int(k), "snap_distance": float(d)}
                              for v, k, d in zip(self.cut.vertices, self.cut.orders,
                                                 self.cut.snap_distance)],
            "cut_edges": int(len(self.cut.edges)),
            "boundary_vertex": self.cut.boundary_vertex,
            "branch_tears": int(self.branch_tears),
            "path_residual": float(self.path_residual),
            "max_transition_error_deg": float(self.max_transition_error_deg()),
            "transitions": [t.to_json() for t in self.transitions],
            "cone_angles": [c.to_json() for c in self.cone_angles],
        }


def _ring_mask(mesh, seeds, rings):
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[seeds] = True
    front = list(seeds)
    for _ in range(rings):
        nxt = [u for v in front for u in mesh.neighbors(v) if not mask[u]]
        mask[nxt] = True
        front = nxt
    return mask


def _seed_face(chart):
    f = np.array(chart.work.faces)
    z = chart.z
    c = z.mean()
    a, b, d = z[f[:, 0]], z[f[:, 1]], z[f[:, 2]]

    def cross(u, v):
        return (np.conj(u) * v).imag

    inside = (cross(b - a, c - a) >= 0) & (cross(d - b, c - b) >= 0) & (cross(a - d, c - d) >= 0)
    hits = np.flatnonzero(inside)
    if len(hits):
        return int(hits[0])
    return int(np.argmin(np.abs((a + b + d) / 3 - c)))


def integrate_fourth_root(chart, rq, cut=None):
    """Integrate a branch of ``f^(1/4) dz`` over the chart cut open along ``cut``.

    The branch is seeded with the principal root at the barycentre of the
    triangle containing the chart centroid (where ``w = 0``) and carried
    breadth-first through the cut-open chart, Gauss-Legendre quadrature per
    edge, four-fold subdivision within two rings of a singular vertex and a
    graded substitution on edges ending at one.  Every edge not used by the
    traversal is re-integrated as a check: a root mismatch above ``pi / 4``
    raises :class:`BranchTear`.
    """
    cut = singular_cut_graph(chart, rq) if cut is None else cut
    work = chart.work
    rq = rq.moved(chart.z[cut.vertices]) if len(cut.vertices) else rq
    corner, to_orig, disk = cut_open(work, cut.mask(work.n_edges))
    zd = chart.z[to_orig]
    nd = disk.n_vertices
    order = np.zeros(work.n_vertices, dtype=np.int64)
    order[cut.vertices] = cut.orders
    sing = order[to_orig] != 0
    near = _ring_mask(work, cut.vertices, NEAR_RINGS)[to_orig] if len(cut.vertices) else np.zeros(nd, bool)
    spts = chart.z[cut.vertices]

    # adjacency of the cut-open chart
    ev = disk.edge_vertices
    src = np.concatenate([ev[:, 0], ev[:, 1]])
    dst = np.concatenate([ev[:, 1], ev[:, 0]])
    eid = np.concatenate([np.arange(len(ev)), np.arange(len(ev))])
    srt = np.argsort(src, kind="stable")
    src, dst, eid = src[srt], dst[srt], eid[srt]
    indptr = np.searchsorted(src, np.arange(nd + 1))

    w = np.full(nd, np.nan + 0j)
    hv = np.full(nd, np.nan + 0j)
    done = np.zeros(nd, dtype=bool)
    tree = np.zeros(len(ev), dtype=bool)

    t0 = _seed_face(chart)
    hs = [int(h) for h in range(work.face_start[t0], work.face_start[t0] + 3)]
    bary = chart.z[list(work.faces[t0])].mean()
    regular = [h for h in hs if not sing[corner[h]]]
    if not regular:
        raise SingularityError("the seed triangle has only singular corners; refine the mesh")
    seed = int(corner[regular[0]])
    h_bary = rq.root(np.array([bary]))
    integral, h_seed = _integrate_segments(rq, np.array([bary]), zd[[seed]], h_bary, NEAR_SUBDIV)
    w[seed], hv[seed], done[seed] = integral[0], h_seed[0], True
    front = np.array([seed])

    def step(xs, ys):
        """Integrate along disk edges ``xs -> ys`` (``xs`` regular)."""
        val = np.empty(len(xs), dtype=complex)
        hend = np.full(len(xs), np.nan + 0j)
        into = sing[ys]
        n_sub = np.where(near[xs] | near[ys], NEAR_SUBDIV, 1)
        n_sub = np.maximum(n_sub, _adaptive_subdivision(zd[xs], zd[ys], spts))
        for n in np.unique(n_sub[~into]):
            idx = np.flatnonzero(~into & (n_sub == n))
            val[idx], hend[idx] = _integrate_segments(rq, zd[xs[idx]], zd[ys[idx]], hv[xs[idx]], int(n))
        idx = np.flatnonzero(into)
        if len(idx):
            k = order[to_orig[ys[idx]]].astype(float)
            val[idx] = _integrate_to_singular(rq, zd[xs[idx]], zd[ys[idx]], k, hv[xs[idx]])
        return val, hend

    while len(front):
        starts, stops = indptr[front], indptr[front + 1]
        sel = np.concatenate([np.arange(a, b) for a, b in zip(starts, stops)])
        ys = dst[sel]
        keep = ~done[ys]
        sel, ys = sel[keep], ys[keep]
        ys, first = np.unique(ys, return_index=True)
        sel = sel[first]
        xs = src[sel]
        val, hend = step(xs, ys)
        w[ys] = w[xs] + val
        hv[ys] = hend
        done[ys] = True
        tree[eid[sel]] = True
        front = ys[~sing[ys]]
    if not done.all():
        raise SingularityError(f"{int((~done).sum())} chart vertices unreachable without crossing the cut")

    # consistency on every remaining edge
    rest = np.flatnonzero(~tree)
    a, b = ev[rest, 0], ev[rest, 1]
    swap = sing[a]
    a, b = np.where(swap, b, a), np.where(swap, a, b)
    both_sing = sing[a]
    a, b, rest = a[~both_sing], b[~both_sing], rest[~both_sing]
    val, hend = step(a, b)
    mism = np.abs(w[a] + val - w[b]) / np.maximum(np.abs(zd[b] - zd[a]), 1e-300)
    path_residual = float(mism.max()) if len(mism) else 0.0
    reg = ~sing[b]
    jump = np.abs(np.angle(hend[reg] / hv[b[reg]]))
    bad = np.flatnonzero(jump > TEAR_ANGLE)
    if len(bad):
        i = int(np.flatnonzero(reg)[bad[0]])
        edge = (int(to_orig[a[i]]), int(to_orig[b[i]]))
        raise BranchTear(f"branch of the fourth root jumps by {jump[bad[0]]:.3f} rad across edge {edge}; "
                         "refine the mesh near the singularities", edge=edge)

    corner_w = w[corner]
    branch = _branch_labels(rq, work, corner, hv, zd, sing)
    transitions = _transitions(work, cut, corner_w)
    cones = _cone_angles(chart, cut, corner, corner_w)
    return UVAtlas(chart, rq, cut, corner, disk, w, hv, corner_w, branch, transitions, cones,
                   path_residual, 0)


def _branch_labels(rq, work, corner, hv, zd, sing):
    lab = np.zeros(work.n_faces, dtype=np.int64)
    for t in range(work.n_faces):
        for h in range(work.face_start[t], work.face_start[t] + 3):
            d = corner[h]
            if not sing[d]:
                r = rq.root(np.array([zd[d]]))[0]
                lab[t] = int(np.rint(np.angle(hv[d] / r) / (math.pi / 2))) % 4
                break
    return lab


def _transitions(work, cut, corner_w):
    out = []
    for e in cut.edges:
        h1 = int(work.edge_he[e])
        h2 = int(work.he_twin[h1])
        if h2 < 0:
            continue
        w1a, w1b = corner_w[h1], corner_w[work.he_next[h1]]
        w2b, w2a = corner_w[h2], corner_w[work.he_next[h2]]
        r = (w2b - w2a) / (w1b - w1a)
        k = int(np.rint(np.angle(r) / (math.pi / 2))) % 4
        err = abs(math.degrees(np.angle(r * np.exp(-0.5j * math.pi * k))))
        out.append(Transition((int(work.he_origin[h1]), int(work.he_dest[h1])), k, err,
                              abs(abs(r) - 1), complex(w2a - r * w1a)))
    return out


def _cone_angles(chart, cut, corner, corner_w):
    work = chart.work
    out = []
    for v, k in zip(cut.vertices, cut.orders):
        total = 0.0
        for h in work.outgoing(int(v)):
            ws = corner_w[h]
            wa = corner_w[work.he_next[h]]
            wb = corner_w[work.he_prev[h]]
            total += float(np.angle((wb - ws) / (wa - ws)))
        out.append(ConeAngle(int(v), int(k), total, (k + 4) * math.pi / 2,
                             complete=not work.is_boundary_vertex(int(v))))
    return out


def export_obj_with_uv(mesh, atlas, path, checker_scale=8.0):
    """Write ``mesh`` with one ``vt = w * checker_scale`` record per face corner."""
    w = atlas.original_corner_w() * checker_scale
    uv = np.column_stack([w.real, w.imag])
    save_obj(mesh, path, uv=uv, corner_uv=np.arange(mesh.n_halfedges),
             comment=f"texture coordinates: integrated fourth root, scale {checker_scale:g}")
    return path
