"""Halfedge surface meshes, OBJ I/O, divisors and the quad metric.

A :class:`Mesh` is an immutable oriented 2-manifold made of triangles and/or
quadrilaterals.  Halfedges are stored in flat numpy arrays; halfedge ``h`` of
face ``f`` at corner ``c`` runs from ``faces[f][c]`` to ``faces[f][c + 1]``.
Boundary halfedges are not materialised: a halfedge without a twin has
``twin == -1``.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateTriangleError,
    EmptyMeshError,
    MeshError,
    NonManifoldError,
    OrientationError,
    TopologyError,
    UnsupportedFaceDegree,
)


class Mesh:
    """Immutable halfedge mesh.

    Parameters
    ----------
    faces : sequence of sequence of int
        Face loops, 0-based vertex ids, counter-clockwise.  Degree 3 or 4.
    positions : array_like, optional
        ``(V, 3)`` vertex coordinates.  Abstract meshes may omit them.
    n_vertices : int, optional
        Vertex count when no positions are given.

    Raises
    ------
    UnsupportedFaceDegree, NonManifoldError, OrientationError, EmptyMeshError
    """

    def __init__(self, faces, positions=None, *, n_vertices=None):
        faces = tuple(tuple(int(i) for i in f) for f in faces)
        if not faces:
            raise EmptyMeshError("mesh has no faces")
        if positions is not None:
            positions = np.array(positions, dtype=float)
            if positions.ndim != 2 or positions.shape[1] not in (2, 3):
                raise MeshError("positions must be an (V, 3) array")
            if positions.shape[1] == 2:
                positions = np.column_stack([positions, np.zeros(len(positions))])
            positions.setflags(write=False)
            nv = len(positions)
        else:
            nv = n_vertices if n_vertices is not None else 1 + max(max(f) for f in faces)
        for fi, f in enumerate(faces):
            if len(f) not in (3, 4):
                raise UnsupportedFaceDegree(f"face {fi} has degree {len(f)}; only 3 and 4 are supported")
            if len(set(f)) != len(f):
                raise MeshError(f"face {fi} repeats a vertex: {f}")
            if min(f) < 0 or max(f) >= nv:
                raise MeshError(f"face {fi} references a vertex out of range")

        self.faces = faces
        self.positions = positions
        self._nv = nv
        self._build()

    # -- construction ------------------------------------------------------

    def _build(self):
        degree = np.array([len(f) for f in self.faces], dtype=np.int64)
        start = np.zeros(len(degree) + 1, dtype=np.int64)
        np.cumsum(degree, out=start[1:])
        nh = int(start[-1])

        origin = np.empty(nh, dtype=np.int64)
        dest = np.empty(nh, dtype=np.int64)
        face = np.empty(nh, dtype=np.int64)
        corner = np.empty(nh, dtype=np.int64)
        nxt = np.empty(nh, dtype=np.int64)
        prv = np.empty(nh, dtype=np.int64)
        for fi, f in enumerate(self.faces):
            s, d = int(start[fi]), len(f)
            for c in range(d):
                h = s + c
                origin[h] = f[c]
                dest[h] = f[(c + 1) % d]
                face[h] = fi
                corner[h] = c
                nxt[h] = s + (c + 1) % d
                prv[h] = s + (c - 1) % d

        lookup = {}
        undirected = Counter()
        for h in range(nh):
            key = (int(origin[h]), int(dest[h]))
            undirected[(min(key), max(key))] += 1
            if key in lookup:
                lookup[key] = -1
            else:
                lookup[key] = h
        bad = [e for e, n in undirected.items() if n > 2]
        if bad:
            raise NonManifoldError(f"edge {bad[0]} has more than two incident faces")
        clash = [k for k, h in lookup.items() if h < 0]
        if clash:
            raise OrientationError(f"edge {clash[0]} is traversed twice in the same direction; "
                                   "faces have mixed orientation")

        twin = np.array([lookup.get((int(dest[h]), int(origin[h])), -1) for h in range(nh)],
                        dtype=np.int64)
        edge_of = np.empty(nh, dtype=np.int64)
        edge_he = []
        for h in range(nh):
            t = twin[h]
            if t < 0 or h < t:
                edge_of[h] = len(edge_he)
                edge_he.append(h)
        for h in range(nh):
            t = twin[h]
            if t >= 0 and t < h:
                edge_of[h] = edge_of[t]
        edge_he = np.array(edge_he, dtype=np.int64)

        used = np.zeros(self._nv, dtype=bool)
        used[origin] = True
        if not used.all():
            raise MeshError(f"vertex {int(np.flatnonzero(~used)[0])} is not referenced by any face")

        # One outgoing halfedge per vertex; boundary vertices get the one with
        # no clockwise neighbour so that counter-clockwise walks cover the fan.
        out = np.full(self._nv, -1, dtype=np.int64)
        n_out = np.zeros(self._nv, dtype=np.int64)
        for h in range(nh):
            v = origin[h]
            n_out[v] += 1
            if out[v] < 0 or twin[h] < 0:
                if twin[h] < 0 and out[v] >= 0 and twin[out[v]] < 0:
                    raise NonManifoldError(f"vertex {int(v)} has more than one boundary fan")
                out[v] = h

        self.n_halfedges = nh
        self.face_start = start
        self.face_degree = degree
        self.he_origin = origin
        self.he_dest = dest
        self.he_face = face
        self.he_corner = corner
        self.he_next = nxt
        self.he_prev = prv
        self.he_twin = twin
        self.he_edge = edge_of
        self.edge_he = edge_he
        self.edge_vertices = np.column_stack([origin[edge_he], dest[edge_he]])
        self._out = out
        self._lookup = {k: h for k, h in lookup.items()}
        for arr in (start, degree, origin, dest, face, corner, nxt, prv, twin, edge_of,
                    edge_he, self.edge_vertices, out):
            arr.setflags(write=False)

        for v in range(self._nv):
            if len(self.outgoing(v)) != n_out[v]:
                raise NonManifoldError(f"vertex {v} is non-manifold (its faces form several fans)")

        if self._count_components() != 1:
            raise MeshError("mesh is not connected")

    def _count_components(self):
        parent = list(range(len(self.faces)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for h in range(self.n_halfedges):
            t = self.he_twin[h]
            if t >= 0:
                a, b = find(int(self.he_face[h])), find(int(self.he_face[t]))
                if a != b:
                    parent[a] = b
        return len({find(f) for f in range(len(self.faces))})

    # -- basic queries -----------------------------------------------------

    @property
    def n_vertices(self):
        return self._nv

    @property
    def n_edges(self):
        return len(self.edge_he)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def is_closed(self):
        return bool((self.he_twin >= 0).all())

    @property
    def is_quad(self):
        return bool((self.face_degree == 4).all())

    @property
    def is_triangle(self):
        return bool((self.face_degree == 3).all())

    def boundary_loops(self):
        """Boundary cycles as vertex lists, in the direction of the face halfedges."""
        nxt_on_boundary = {}
        for h in np.flatnonzero(self.he_twin < 0):
            nxt_on_boundary[int(self.he_origin[h])] = int(self.he_dest[h])
        loops, seen = [], set()
        for v0 in sorted(nxt_on_boundary):
            if v0 in seen:
                continue
            loop, v = [], v0
            while v not in seen:
                seen.add(v)
                loop.append(v)
                v = nxt_on_boundary[v]
            loops.append(loop)
        return loops

    @property
    def genus(self):
        b = len(self.boundary_loops())
        g2 = 2 - self.euler_characteristic - b
        if g2 % 2:
            raise TopologyError("inconsistent Euler characteristic")
        return g2 // 2

    def halfedge(self, u, v):
        """Halfedge id of the directed edge ``u -> v`` (KeyError if absent)."""
        return self._lookup[(u, v)]

    def has_halfedge(self, u, v):
        return (u, v) in self._lookup

    def edge_id(self, u, v):
        h = self._lookup.get((u, v))
        if h is None:
            h = self._lookup[(v, u)]
        return int(self.he_edge[h])

    def ccw_next(self, h):
        """Next outgoing halfedge counter-clockwise around ``origin(h)``, or -1."""
        return int(self.he_twin[self.he_prev[h]])

    def outgoing(self, v):
        """Outgoing halfedges of ``v`` in counter-clockwise order."""
        h0 = int(self._out[v])
        res, h = [h0], self.ccw_next(h0)
        while h >= 0 and h != h0:
            res.append(h)
            if len(res) > self.n_halfedges:
                raise NonManifoldError(f"vertex {v} fan does not close")
            h = self.ccw_next(h)
        return res

    def neighbors(self, v):
        """Vertices adjacent to ``v``, counter-clockwise (boundary fans are closed off)."""
        hs = self.outgoing(v)
        nb = [int(self.he_dest[h]) for h in hs]
        last = hs[-1]
        if self.ccw_next(last) < 0:
            nb.append(int(self.he_origin[self.he_prev[last]]))
        return nb

    def valence(self, v):
        """Topological valence: number of faces incident to ``v``."""
        return len(self.outgoing(v))

    def valences(self):
        return np.bincount(self.he_origin, minlength=self.n_vertices)

    def is_boundary_vertex(self, v):
        return self.he_twin[self._out[v]] < 0

    def edge_lengths(self):
        if self.positions is None:
            raise MeshError("mesh has no embedding; edge lengths are undefined")
        p = self.positions
        ev = self.edge_vertices
        return np.linalg.norm(p[ev[:, 1]] - p[ev[:, 0]], axis=1)

    def triangulated(self):
        """Split quads along the diagonal from corner 0 to corner 2.

        Returns ``(triangles, parent)`` where ``parent[t]`` is the face that
        triangle ``t`` came from.
        """
        tris, parent = [], []
        for fi, f in enumerate(self.faces):
            if len(f) == 3:
                tris.append(f)
                parent.append(fi)
            else:
                tris.append((f[0], f[1], f[2]))
                tris.append((f[0], f[2], f[3]))
                parent.extend((fi, fi))
        return tris, np.array(parent, dtype=np.int64)

    def __repr__(self):
        return (f"Mesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces}, "
                f"chi={self.euler_characteristic})")


# -- OBJ ---------------------------------------------------------------------

def load_mesh(path, format="obj"):
    """Read an ASCII OBJ file (``v`` and ``f`` records; ``vt``/``vn`` ignored)."""
    if format != "obj":
        raise MeshError(f"unsupported format {format!r}")
    verts, faces = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.split()
            if not tok or tok[0].startswith("#"):
                continue
            if tok[0] == "v":
                try:
                    verts.append([float(x) for x in tok[1:4]])
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: bad vertex record") from exc
            elif tok[0] == "f":
                idx = []
                for t in tok[1:]:
                    i = int(t.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                faces.append(idx)
    if not verts or not faces:
        raise EmptyMeshError(f"{path}: no vertices or faces")
    return Mesh(faces, positions=verts)


def save_obj(mesh, path, uv=None, corner_uv=None, comment=None):
    """Write ``mesh`` to OBJ.

    ``uv`` is an ``(K, 2)`` array of texture coordinates and ``corner_uv`` an
    integer array indexed by halfedge (i.e. by face corner) selecting the
    ``vt`` record for that corner.
    """
    if mesh.positions is None:
        raise MeshError("cannot write an abstract mesh without positions")
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    for p in mesh.positions:
        lines.append("v %s %s %s" % tuple(repr(float(x)) for x in p))
    if uv is not None:
        for t in uv:
            lines.append("vt %s %s" % (repr(float(t[0])), repr(float(t[1]))))
    for fi, f in enumerate(mesh.faces):
        if uv is None:
            lines.append("f " + " ".join(str(v + 1) for v in f))
        else:
            s = int(mesh.face_start[fi])
            lines.append("f " + " ".join(f"{v + 1}/{int(corner_uv[s + c]) + 1}"
                                         for c, v in enumerate(f)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- divisors ----------------------------------------------------------------

class Divisor:
    """Finite formal integer combination of sites.

    Sites are vertex ids (``int``) or planar points (``complex``).  Zero
    orders are dropped on construction.
    """

    def __init__(self, entries=()):
        acc = {}
        items = entries.items() if isinstance(entries, dict) else entries
        for site, order in items:
            site = self._norm_site(site)
            acc[site] = acc.get(site, 0) + int(order)
        self._entries = {s: n for s, n in acc.items() if n != 0}

    @staticmethod
    def _norm_site(site):
        if isinstance(site, (bool, np.bool_)):
            raise TypeError("divisor site must be a vertex id or a complex point")
        if isinstance(site, (int, np.integer)):
            return int(site)
        return complex(site)

    @property
    def entries(self):
        return sorted(self._entries.items(), key=lambda kv: _site_key(kv[0]))

    @property
    def degree(self):
        return sum(self._entries.values())

    def order(self, site):
        return self._entries.get(self._norm_site(site), 0)

    def sites(self):
        return [s for s, _ in self.entries]

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self.entries)

    def __add__(self, other):
        return Divisor(list(self._entries.items()) + list(other._entries.items()))

    def __neg__(self):
        return Divisor({s: -n for s, n in self._entries.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k):
        if not isinstance(k, (int, np.integer)):
            return NotImplemented
        return Divisor({s: int(k) * n for s, n in self._entries.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Divisor) and self._entries == other._entries

    def __hash__(self):
        return hash(tuple(self.entries))

    def __repr__(self):
        body = " + ".join(f"{n}*{s}" for s, n in self.entries)
        return f"Divisor({body or '0'})"

    def to_json(self):
        out = []
        for s, n in self.entries:
            if isinstance(s, int):
                out.append({"vertex": s, "order": n})
            else:
                out.append({"re": s.real, "im": s.imag, "order": n})
        return {"entries": out}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text(encoding="utf-8"))
        entries = []
        for e in data["entries"]:
            if "vertex" in e:
                entries.append((int(e["vertex"]), int(e["order"])))
            else:
                entries.append((complex(e["re"], e["im"]), int(e["order"])))
        return cls(entries)


def _site_key(s):
    return (0, s, 0.0) if isinstance(s, int) else (1, s.real, s.imag)


def divisor_of_quad_mesh(mesh):
    """Singularity divisor ``sum (valence(v) - 4) v`` of a closed quad mesh."""
    if not mesh.is_quad:
        raise MeshError("divisor_of_quad_mesh requires an all-quad mesh")
    if not mesh.is_closed:
        raise TopologyError("divisor_of_quad_mesh requires a closed mesh")
    val = mesh.valences()
    return Divisor((int(v), int(k) - 4) for v, k in enumerate(val) if k != 4)


def gauss_bonnet_report(mesh):
    """Integer Gauss-Bonnet check ``sum (4 - k(v)) == 4 chi`` for closed quad meshes.

    ``lhs`` is reported as ``sum (k(v) - 4)`` (the divisor degree) and ``rhs``
    as ``-4 chi``; both sides are exact integers.
    """
    if not mesh.is_quad:
        raise MeshError("gauss_bonnet_report requires an all-quad mesh")
    if not mesh.is_closed:
        raise TopologyError("gauss_bonnet_report requires a closed mesh")
    lhs = int((mesh.valences() - 4).sum())
    rhs = -4 * mesh.euler_characteristic
    return {"lhs": lhs, "rhs": rhs, "ok": lhs == rhs}


# -- metrics -----------------------------------------------------------------

class MetricMesh:
    """A mesh with an intrinsic flat metric on its auxiliary triangulation.

    Attributes
    ----------
    mesh : Mesh
        The original (triangle or quad) mesh.
    tri : Mesh
        Auxiliary triangulation on the same vertex ids.
    tri_parent : ndarray
        Original face of each triangle.
    len2 : ndarray
        Squared length of every edge of ``tri``.
    exact_quad : bool
        True for the unit-square metric, where lengths are 1 and sqrt(2).
    """

    def __init__(self, mesh, tri, tri_parent, len2, exact_quad=False):
        self.mesh = mesh
        self.tri = tri
        self.tri_parent = tri_parent
        self.len2 = np.asarray(len2, dtype=float)
        self.exact_quad = exact_quad
        self._geometry()

    def _geometry(self):
        tri = self.tri
        faces = np.array(tri.faces, dtype=np.int64)
        # opposite edge of corner c in triangle t is (c+1 -> c+2), i.e. halfedge s+c+1
        he = tri.face_start[:-1, None] + np.array([[1, 2, 0]])
        l2 = self.len2[tri.he_edge[he]]            # l2[t, c] = squared length opposite corner c
        a, b, c = l2[:, 0], l2[:, 1], l2[:, 2]
        area16 = 2 * (a * b + b * c + c * a) - (a * a + b * b + c * c)
        bad = np.flatnonzero(~(area16 > 1e-14 * (a + b + c) ** 2))
        if len(bad):
            t = int(bad[0])
            raise DegenerateTriangleError(
                f"triangle {t} {tuple(faces[t])} is degenerate (violates the triangle inequality)",
                triangle=t)
        area = 0.25 * np.sqrt(area16)
        cot = np.empty_like(l2)
        for k in range(3):
            opp = l2[:, k]
            s1, s2 = l2[:, (k + 1) % 3], l2[:, (k + 2) % 3]
            cot[:, k] = (s1 + s2 - opp) / (4 * area)
        self.tri_faces = faces
        self.tri_area = area
        self.tri_cot = cot
        self.corner_angles = np.arctan2(1.0, cot) % math.pi

    def cone_angle(self, v=None):
        """Sum of incident corner angles (all vertices if ``v`` is None)."""
        ang = np.bincount(self.tri_faces.ravel(), weights=self.corner_angles.ravel(),
                          minlength=self.tri.n_vertices)
        return ang if v is None else float(ang[v])

    def curvature(self, v=None):
        k = 2 * math.pi - self.cone_angle()
        if not self.mesh.is_closed:
            bnd = np.array([self.tri.is_boundary_vertex(i) for i in range(self.tri.n_vertices)])
            k[bnd] = math.pi - self.cone_angle()[bnd]
        return k if v is None else float(k[v])

    def cone_angle_exact(self, v):
        """Cone angle divided by pi as an exact Fraction (unit-square metric only)."""
        if not self.exact_quad:
            raise MeshError("exact cone angles are available for the quad metric only")
        return Fraction(self.mesh.valence(v), 2)

    def curvature_exact(self, v):
        """Curvature divided by pi, exact: ``(4 - k) / 2``."""
        return 2 - self.cone_angle_exact(v)

    def cotan_weights(self):
        """Edge weights ``(cot a + cot b) / 2`` on the edges of ``tri``."""
        tri = self.tri
        he = tri.face_start[:-1, None] + np.array([[1, 2, 0]])
        w = np.bincount(tri.he_edge[he].ravel(), weights=0.5 * self.tri_cot.ravel(),
                        minlength=tri.n_edges)
        return w

    def law_of_cosines_residual(self):
        """Max |angle sum - pi| over triangles, a consistency check of the angles."""
        return float(np.abs(self.corner_angles.sum(axis=1) - math.pi).max())


def _triangulation(mesh):
    tris, parent = mesh.triangulated()
    tri = Mesh(tris, positions=mesh.positions, n_vertices=mesh.n_vertices)
    return tri, parent


def quad_metric(mesh):
    """Unit-square metric of a quad mesh: edges 1, diagonals sqrt(2)."""
    if not mesh.is_quad:
        raise MeshError("quad_metric requires an all-quad mesh")
    tri, parent = _triangulation(mesh)
    ev = tri.edge_vertices
    is_orig = np.array([mesh.has_halfedge(int(u), int(v)) or mesh.has_halfedge(int(v), int(u))
                        for u, v in ev])
    len2 = np.where(is_orig, 1.0, 2.0)
    return MetricMesh(mesh, tri, parent, len2, exact_quad=True)


def embedded_metric(mesh):
    """Metric induced by the vertex positions (quads split as in ``quad_metric``)."""
    tri, parent = _triangulation(mesh)
    return MetricMesh(mesh, tri, parent, tri.edge_lengths() ** 2)


def default_metric(mesh):
    """Quad metric for all-quad meshes, the embedding otherwise."""
    return quad_metric(mesh) if mesh.is_quad else embedded_metric(mesh)
