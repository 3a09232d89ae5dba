"""Homology generators, intersection numbers, symplectic bases and slicing.

Generators come from a tree-cotree decomposition: a breadth-first spanning
tree ``T`` of the vertices, a maximum-weight spanning tree ``C`` of the dual
graph among the remaining edges, and the ``2g`` leftover edges ``e`` each
closing a cycle through ``T``.  Weighting the dual tree by the length of the
cycle ``e`` would close makes the leftover loops the shortest system of loops
through the root.

Intersection numbers
--------------------
For a simple closed edge cycle ``a`` define, at every vertex ``x`` of ``a``,
its *left wedge*: the outgoing edges strictly between ``x -> next(x)`` and
``x -> prev(x)`` when turning counter-clockwise.  Let ``s(x, e) = 1`` when
``e`` lies in the left wedge at ``x`` and 0 otherwise, and put

    phi_a(u -> v) = s(v, uv) - s(u, uv).

``phi_a`` is closed (it is the coboundary of the left-side indicator near
``a``) and a walk picks up ``-1`` each time it passes from the right of ``a``
to its left, whether it crosses at a vertex or runs along ``a`` for a while
before leaving.  Walking along ``a`` itself contributes nothing.  The
algebraic intersection number is ``a . b = -sum_b phi_a``, so that the
positive x-axis meets the positive y-axis with ``+1`` on a counter-clockwise
surface.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DependentLoopsError, NonUnimodular, SliceError, TopologyError
from .mesh_core import Mesh


@dataclass(frozen=True)
class Loop:
    """Closed edge walk ``vertices[0] -> ... -> vertices[-1] == vertices[0]``."""

    vertices: tuple
    label: str = ""

    def __post_init__(self):
        if len(self.vertices) < 2 or self.vertices[0] != self.vertices[-1]:
            raise ValueError("a loop must start and end at the same vertex")

    def __len__(self):
        return len(self.vertices) - 1

    def steps(self):
        return zip(self.vertices[:-1], self.vertices[1:])

    def reversed(self):
        return Loop(tuple(reversed(self.vertices)), self.label)

    def is_simple(self):
        return len(set(self.vertices[:-1])) == len(self)

    def to_json(self):
        return {"label": self.label, "vertices": list(self.vertices)}


def edge_chain(mesh, walk):
    """Signed edge multiplicities of a walk (edges in their canonical direction)."""
    chain = np.zeros(mesh.n_edges, dtype=np.int64)
    for u, v in walk.steps():
        e = mesh.edge_id(u, v)
        chain[e] += 1 if mesh.edge_vertices[e, 0] == u else -1
    return chain


def integrate(mesh, form, walk):
    """Sum of an edge 1-form (canonical edge direction) along a walk."""
    return np.tensordot(edge_chain(mesh, walk), form, axes=(0, -1))


def _bfs(mesh, root, allowed=None):
    parent = np.full(mesh.n_vertices, -1, dtype=np.int64)
    depth = np.full(mesh.n_vertices, -1, dtype=np.int64)
    depth[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in mesh.neighbors(u):
            if depth[v] < 0 and (allowed is None or allowed(u, v)):
                depth[v] = depth[u] + 1
                parent[v] = u
                queue.append(v)
    return parent, depth


def _tree_path(parent, v):
    path = [v]
    while parent[path[-1]] >= 0:
        path.append(int(parent[path[-1]]))
    return path[::-1]


def shortest_path(mesh, source, target):
    parent, depth = _bfs(mesh, source)
    if depth[target] < 0:
        raise TopologyError(f"vertex {target} unreachable from {source}")
    return _tree_path(parent, target)


def _tree_cotree(mesh, root):
    parent, depth = _bfs(mesh, root)
    tree = np.zeros(mesh.n_edges, dtype=bool)
    for v in range(mesh.n_vertices):
        if parent[v] >= 0:
            tree[mesh.edge_id(int(parent[v]), v)] = True
    ev = mesh.edge_vertices
    weight = depth[ev[:, 0]] + depth[ev[:, 1]] + 1
    candidates = sorted(np.flatnonzero(~tree), key=lambda e: (-weight[e], e))

    uf = list(range(mesh.n_faces))

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    cotree = np.zeros(mesh.n_edges, dtype=bool)
    for e in candidates:
        h = mesh.edge_he[e]
        f, g = find(int(mesh.he_face[h])), find(int(mesh.he_face[mesh.he_twin[h]]))
        if f != g:
            uf[f] = g
            cotree[e] = True
    leftover = [int(e) for e in np.flatnonzero(~tree & ~cotree)]
    leftover.sort(key=lambda e: (weight[e], e))
    return parent, tree, cotree, leftover


def raw_generators(mesh, root=0):
    """``2g`` simple edge cycles generating H_1 of a closed mesh.

    Each cycle is the tree cycle of a leftover tree-cotree edge with its
    shared stem toward the root removed.
    """
    if not mesh.is_closed:
        raise TopologyError("raw_generators requires a closed mesh")
    g = mesh.genus
    if g == 0:
        return []
    parent, _, _, leftover = _tree_cotree(mesh, root)
    if len(leftover) != 2 * g:
        raise TopologyError(f"tree-cotree left {len(leftover)} edges, expected {2 * g}")
    loops = []
    for k, e in enumerate(leftover):
        u, v = (int(x) for x in mesh.edge_vertices[e])
        pu, pv = _tree_path(parent, u), _tree_path(parent, v)
        i = 0
        while i < min(len(pu), len(pv)) and pu[i] == pv[i]:
            i += 1
        # pu[i-1] is the lowest common ancestor
        cycle = pu[i - 1:] + pv[i - 1:][::-1]
        loops.append(Loop(tuple(cycle), f"g{k + 1}"))
    return loops


def crossing_form(mesh, loop):
    """The closed form ``phi`` of a simple loop (see module docstring)."""
    if not loop.is_simple():
        raise ValueError("crossing_form needs a simple cycle")
    phi = np.zeros(mesh.n_edges, dtype=np.int64)
    vs = loop.vertices
    n = len(loop)
    for k in range(n):
        x, nxt, prv = vs[k], vs[k + 1], vs[(k - 1) % n]
        h_out, h_back = mesh.halfedge(x, nxt), mesh.halfedge(x, prv)
        h = mesh.ccw_next(h_out)
        while h != h_back:
            if h < 0:
                raise TopologyError("loop touches the boundary")
            e = mesh.he_edge[h]
            phi[e] += -1 if mesh.edge_vertices[e, 0] == x else 1
            h = mesh.ccw_next(h)
    return phi


def intersection_number(mesh, a, b):
    """Algebraic intersection ``a . b`` of a simple cycle ``a`` with a closed walk ``b``."""
    return -int(integrate(mesh, crossing_form(mesh, a), b))


def intersection_matrix(mesh, loops):
    forms = [crossing_form(mesh, a) for a in loops]
    chains = [edge_chain(mesh, b) for b in loops]
    return np.array([[-int(c @ f) for c in chains] for f in forms], dtype=np.int64)


def _int_det(m):
    """Exact determinant of a small integer matrix (Bareiss)."""
    a = [[int(x) for x in row] for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def standard_symplectic(g):
    j = np.zeros((2 * g, 2 * g), dtype=np.int64)
    j[:g, g:] = np.eye(g, dtype=np.int64)
    j[g:, :g] = -np.eye(g, dtype=np.int64)
    return j


def symplectic_reduce(intersections, lengths=None):
    """Unimodular ``P`` with ``P @ I @ P.T`` equal to the standard symplectic form.

    Rows of ``P`` are ordered ``a_1..a_g, b_1..b_g``.  Pivots are the
    shortest remaining combination (by ``lengths``), ties by index.
    """
    m = np.array(intersections, dtype=object)
    n = m.shape[0]
    if n % 2 or (m != -m.T).any():
        raise DependentLoopsError("intersection matrix is not antisymmetric of even size")
    det = _int_det(m)
    if det == 0:
        raise DependentLoopsError("loops are homologically dependent (intersection matrix singular)")
    if abs(det) != 1:
        raise NonUnimodular(f"intersection matrix has determinant {det}; generators are not a Z-basis")
    lengths = np.ones(n) if lengths is None else np.asarray(lengths, dtype=float)
    rows = [np.eye(n, dtype=np.int64)[i].astype(object) for i in range(n)]
    form = lambda x, y: int(x @ m @ y)  # noqa: E731
    cost = lambda x: float(np.abs(x.astype(float)) @ lengths)  # noqa: E731
    a_rows, b_rows = [], []
    pool = list(range(n))
    while pool:
        pool.sort(key=lambda i: (cost(rows[i]), i))
        e = pool.pop(0)
        # Euclid on the pairings <e, h> until exactly one partner is left.
        while True:
            nz = [i for i in pool if form(rows[e], rows[i]) != 0]
            if not nz:
                raise NonUnimodular("no symplectic partner found")
            f = min(nz, key=lambda i: (abs(form(rows[e], rows[i])), cost(rows[i]), i))
            ef = form(rows[e], rows[f])
            done = True
            for h in nz:
                if h == f:
                    continue
                q = form(rows[e], rows[h]) // ef
                if q:
                    rows[h] = rows[h] - q * rows[f]
                if form(rows[e], rows[h]) != 0:
                    done = False
            if done:
                break
        if abs(ef) != 1:
            raise NonUnimodular("pairing does not reduce to +-1")
        if ef < 0:
            rows[f] = -rows[f]
        pool.remove(f)
        for h in pool:
            fh, eh = form(rows[f], rows[h]), form(rows[e], rows[h])
            rows[h] = rows[h] + fh * rows[e] - eh * rows[f]
        a_rows.append(rows[e])
        b_rows.append(rows[f])
    p = np.array([list(r) for r in a_rows + b_rows], dtype=np.int64)
    return p


@dataclass
class HomologyBasis:
    """Canonical basis ``a_1..a_g, b_1..b_g`` realised as closed walks.

    ``transform[k]`` gives loop ``k`` as an integer combination of
    ``raw_loops``; ``intersections`` is recomputed from the realised walks.
    """

    mesh: Mesh
    raw_loops: list
    transform: np.ndarray
    loops: list
    intersections: np.ndarray
    chains: np.ndarray = field(repr=False)

    @property
    def genus(self):
        return len(self.loops) // 2

    @property
    def a(self):
        return self.loops[: self.genus]

    @property
    def b(self):
        return self.loops[self.genus:]

    def is_canonical(self):
        return np.array_equal(self.intersections, standard_symplectic(self.genus))

    def dual_cocycles(self):
        """Closed integer 1-forms ``theta_m`` with ``integral over loop k = delta_km``.

        Built from the crossing forms of the raw loops, i.e. from Poincare
        duality, so it works for any realisation of the canonical loops.
        """
        g = self.genus
        if g == 0:
            return np.zeros((0, self.mesh.n_edges))
        psi = np.array([-crossing_form(self.mesh, r) for r in self.raw_loops])
        psi_can = self.transform @ psi
        return standard_symplectic(g).T @ psi_can

    def to_json(self):
        return {
            "genus": self.genus,
            "loops": [lp.to_json() for lp in self.loops],
            "intersections": self.intersections.tolist(),
        }


def _realise(mesh, raw, coeffs, base, label):
    nz = [(j, int(c)) for j, c in enumerate(coeffs) if c]
    if len(nz) == 1 and abs(nz[0][1]) == 1:
        j, c = nz[0]
        lp = raw[j] if c > 0 else raw[j].reversed()
        return Loop(lp.vertices, label)
    walk = [base]
    for j, c in nz:
        lp = raw[j] if c > 0 else raw[j].reversed()
        to = shortest_path(mesh, base, lp.vertices[0])
        walk += to[1:]
        for _ in range(abs(c)):
            walk += list(lp.vertices[1:])
        walk += to[::-1][1:]
    return Loop(tuple(walk), label)


def canonicalize(loops, mesh):
    """Integer recombination of ``loops`` into a canonical symplectic basis."""
    loops = list(loops)
    if not loops:
        return HomologyBasis(mesh, [], np.zeros((0, 0), dtype=np.int64), [],
                             np.zeros((0, 0), dtype=np.int64), np.zeros((0, mesh.n_edges), dtype=np.int64))
    for lp in loops:
        if not lp.is_simple():
            raise ValueError(f"generator {lp.label!r} is not a simple cycle")
    inter = intersection_matrix(mesh, loops)
    p = symplectic_reduce(inter, [len(lp) for lp in loops])
    g = len(loops) // 2
    base = loops[0].vertices[0]
    labels = [f"a{i + 1}" for i in range(g)] + [f"b{i + 1}" for i in range(g)]
    canon = [_realise(mesh, loops, p[k], base, labels[k]) for k in range(2 * g)]
    chains = np.array([edge_chain(mesh, lp) for lp in canon])
    forms = np.array([crossing_form(mesh, r) for r in loops])
    # a_k . b = sum_j P_kj (raw_j . b), each term evaluated on the realised walk b
    raw_vs_canon = -(forms @ chains.T)
    recomputed = p @ raw_vs_canon
    return HomologyBasis(mesh, loops, p, canon, recomputed.astype(np.int64), chains)


def homology_basis(mesh, root=0):
    """``canonicalize(raw_generators(mesh), mesh)``."""
    return canonicalize(raw_generators(mesh, root), mesh)


# -- slicing -------------------------------------------------------------------

@dataclass
class SlicedMesh:
    """Fundamental domain obtained by cutting along a graph containing the basis loops.

    The disk has the same faces (and therefore the same halfedge ids) as the
    original mesh; ``corner_vertex[h]`` is the disk vertex at the origin of
    halfedge ``h``.
    """

    original: Mesh
    cut_edges: np.ndarray
    disk: Mesh
    corner_vertex: np.ndarray
    to_original: np.ndarray
    boundary_word: list
    no_op: bool = False

    def copies(self, v):
        """Disk vertices lying over original vertex ``v``."""
        return [int(d) for d in np.flatnonzero(self.to_original == v)]

    def disk_vertex(self, v):
        """Deterministic representative (lowest id) of ``v`` in the disk."""
        return self.copies(v)[0]

    def word_string(self):
        return " ".join(f"{s}" if e == 1 else f"{s}^-1" for s, e in self.boundary_word)


def _prune(mesh, cut):
    cut = cut.copy()
    deg = np.bincount(mesh.edge_vertices[cut].ravel(), minlength=mesh.n_vertices)
    inc = [[] for _ in range(mesh.n_vertices)]
    for e in np.flatnonzero(cut):
        for x in mesh.edge_vertices[e]:
            inc[x].append(int(e))
    stack = [v for v in range(mesh.n_vertices) if deg[v] == 1]
    while stack:
        v = stack.pop()
        if deg[v] != 1:
            continue
        for e in inc[v]:
            if cut[e]:
                cut[e] = False
                for x in mesh.edge_vertices[e]:
                    deg[x] -= 1
                    if deg[x] == 1:
                        stack.append(int(x))
                break
    return cut


def cut_open(mesh, cut):
    """Split vertices along ``cut`` (boolean per edge); returns the corner map and the new mesh."""
    nh = mesh.n_halfedges
    uf = list(range(nh))

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for h in range(nh):
        t = mesh.he_twin[h]
        if t < 0 or t < h or cut[mesh.he_edge[h]]:
            continue
        for a, b in ((h, mesh.he_next[t]), (mesh.he_next[h], t)):
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                uf[ra] = rb
    roots = [find(h) for h in range(nh)]
    # number copies by (original vertex, smallest corner halfedge)
    first = {}
    for h in range(nh):
        r = roots[h]
        if r not in first or h < first[r]:
            first[r] = h
    order = sorted(first, key=lambda r: (int(mesh.he_origin[first[r]]), first[r]))
    ident = {r: k for k, r in enumerate(order)}
    corner = np.array([ident[r] for r in roots], dtype=np.int64)
    to_orig = np.empty(len(order), dtype=np.int64)
    to_orig[corner] = mesh.he_origin
    faces = [tuple(int(corner[mesh.face_start[f] + c]) for c in range(mesh.face_degree[f]))
             for f in range(mesh.n_faces)]
    pos = None if mesh.positions is None else mesh.positions[to_orig]
    return corner, to_orig, Mesh(faces, positions=pos, n_vertices=len(order))


def slice_mesh(mesh, basis):
    """Cut ``mesh`` into a topological disk along (a superset of) the basis loops."""
    if basis.genus == 0:
        corner = mesh.he_origin.copy()
        return SlicedMesh(mesh, np.zeros(mesh.n_edges, dtype=bool), mesh, corner,
                          np.arange(mesh.n_vertices), [], no_op=True)
    on_loop = np.zeros(mesh.n_edges, dtype=bool)
    for lp in basis.raw_loops:
        for u, v in lp.steps():
            on_loop[mesh.edge_id(u, v)] = True
    # dual BFS that never crosses a loop edge
    crossed = np.zeros(mesh.n_edges, dtype=bool)
    seen = np.zeros(mesh.n_faces, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        f = queue.popleft()
        s = mesh.face_start[f]
        for c in range(mesh.face_degree[f]):
            h = s + c
            e, t = mesh.he_edge[h], mesh.he_twin[h]
            if on_loop[e] or t < 0:
                continue
            g = mesh.he_face[t]
            if not seen[g]:
                seen[g] = True
                crossed[e] = True
                queue.append(g)
    if not seen.all():
        raise SliceError("the basis loops separate the surface; cannot slice into a disk",
                         edges=[tuple(int(x) for x in mesh.edge_vertices[e])
                                for e in np.flatnonzero(on_loop)])
    cut = _prune(mesh, ~crossed)
    corner, to_orig, disk = cut_open(mesh, cut)
    if disk.euler_characteristic != 1 or len(disk.boundary_loops()) != 1:
        raise SliceError("slicing did not produce a disk",
                         edges=[tuple(int(x) for x in mesh.edge_vertices[e]) for e in np.flatnonzero(cut)])
    word = _boundary_word(mesh, disk, basis)
    return SlicedMesh(mesh, cut, disk, corner, to_orig, word)


def _boundary_word(mesh, disk, basis):
    labels = [lp.label for lp in basis.loops]
    word = []
    loop = disk.boundary_loops()[0]
    for i, dv in enumerate(loop):
        h = disk.halfedge(dv, loop[(i + 1) % len(loop)])
        e = mesh.he_edge[h]
        sign = 1 if mesh.he_origin[h] == mesh.edge_vertices[e, 0] else -1
        vec = sign * basis.chains[:, e]
        nz = np.flatnonzero(vec)
        if len(nz) == 0:
            continue
        if len(nz) == 1 and abs(vec[nz[0]]) == 1:
            letter = (labels[nz[0]], int(vec[nz[0]]))
        else:
            # an edge shared by several canonical walks: record its class as a
            # positive combination and the direction separately
            s = 1 if vec[nz[0]] > 0 else -1
            name = "(" + "+".join(f"{s * vec[k]}{labels[k]}" if s * vec[k] != 1 else labels[k]
                                  for k in nz).replace("+-", "-") + ")"
            letter = (name, s)
        if not word or word[-1] != letter:
            word.append(letter)
    while len(word) > 1 and word[0] == word[-1]:
        word.pop()
    return word
