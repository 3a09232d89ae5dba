"""Procedural test surfaces: cube, flat tori, square-tiled surfaces, disks, spheres."""

from __future__ import annotations

import math

import numpy as np

from .mesh_core import Mesh

# Four-square origami of genus 2 whose commutator is a 3-cycle: one cone
# point of angle 6*pi (valence 12 after subdivision), all other vertices flat.
GENUS2_RIGHT = (0, 1, 3, 2)
GENUS2_UP = (1, 2, 0, 3)


def cube():
    pts = [(x, y, z) for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    faces = [
        (0, 2, 3, 1),  # z = 0
        (4, 5, 7, 6),  # z = 1
        (0, 1, 5, 4),  # y = 0
        (2, 6, 7, 3),  # y = 1
        (0, 4, 6, 2),  # x = 0
        (1, 3, 7, 5),  # x = 1
    ]
    return Mesh(faces, positions=pts)


def torus_grid(nx, ny=None, major=2.0, minor=1.0, triangles=False):
    """Regular ``nx`` by ``ny`` quad grid on a torus of revolution.

    Vertex ``(i, j)`` has id ``j * nx + i``; faces are counter-clockwise in
    the ``(i, j)`` parameter plane, corner 0 at the lower-left.
    """
    ny = nx if ny is None else ny
    vid = lambda i, j: (j % ny) * nx + (i % nx)  # noqa: E731
    pts = []
    for j in range(ny):
        for i in range(nx):
            th, ph = 2 * math.pi * i / nx, 2 * math.pi * j / ny
            rr = major + minor * math.cos(ph)
            pts.append((rr * math.cos(th), rr * math.sin(th), minor * math.sin(ph)))
    faces = []
    for j in range(ny):
        for i in range(nx):
            q = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
            if triangles:
                faces += [(q[0], q[1], q[2]), (q[0], q[2], q[3])]
            else:
                faces.append(q)
    return Mesh(faces, positions=pts)


def torus_grid_coords(nx, ny=None):
    """Parameter-plane coordinates ``(i, j)`` of the vertices of :func:`torus_grid`."""
    ny = nx if ny is None else ny
    return [(v % nx, v // nx) for v in range(nx * ny)]


def origami(right=GENUS2_RIGHT, up=GENUS2_UP, n=3):
    """Square-tiled surface from the permutations ``right`` and ``up``.

    Each unit square is subdivided into an ``n`` by ``n`` grid (``n >= 3`` keeps
    the result a simple mesh).  The returned mesh carries placeholder
    positions that lay the squares out side by side; intrinsic computations
    use the unit-square metric instead.
    """
    ns = len(right)
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra

    for s in range(ns):
        for t in range(n + 1):
            union((s, n, t), (right[s], 0, t))
            union((s, t, n), (up[s], t, 0))
    reps = sorted({find((s, i, j)) for s in range(ns) for i in range(n + 1) for j in range(n + 1)})
    index = {r: k for k, r in enumerate(reps)}
    pts = [(1.5 * s + i / n, j / n, 0.0) for s, i, j in reps]
    vid = lambda s, i, j: index[find((s, i, j))]  # noqa: E731
    faces = []
    for s in range(ns):
        for j in range(n):
            for i in range(n):
                faces.append((vid(s, i, j), vid(s, i + 1, j), vid(s, i + 1, j + 1), vid(s, i, j + 1)))
    return Mesh(faces, positions=pts)


def rectangle_grid(nx, ny, width=1.0, height=1.0, triangles=False, origin=(0.0, 0.0)):
    """Planar grid on ``[0, width] x [0, height]``."""
    vid = lambda i, j: j * (nx + 1) + i  # noqa: E731
    pts = [(origin[0] + width * i / nx, origin[1] + height * j / ny, 0.0)
           for j in range(ny + 1) for i in range(nx + 1)]
    faces = []
    for j in range(ny):
        for i in range(nx):
            q = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
            if triangles:
                faces += [(q[0], q[1], q[2]), (q[0], q[2], q[3])]
            else:
                faces.append(q)
    return Mesh(faces, positions=pts)


def _zip_rings(a_ids, a_ang, b_ids, b_ang):
    """Triangulate the annulus between an inner ring ``a`` and outer ring ``b``."""
    faces = []
    na, nb = len(a_ids), len(b_ids)
    i = j = 0
    while i < na or j < nb:
        ai, aj = a_ang[i % na] + 2 * math.pi * (i // na), b_ang[j % nb] + 2 * math.pi * (j // nb)
        an = a_ang[(i + 1) % na] + 2 * math.pi * ((i + 1) // na)
        bn = b_ang[(j + 1) % nb] + 2 * math.pi * ((j + 1) // nb)
        advance_b = j < nb and (i >= na or bn - aj <= an - ai and bn <= an + 1e-12 or bn < an)
        if advance_b:
            faces.append((a_ids[i % na], b_ids[j % nb], b_ids[(j + 1) % nb]))
            j += 1
        else:
            faces.append((a_ids[i % na], b_ids[j % nb], a_ids[(i + 1) % na]))
            i += 1
    return faces


def _ring_mesh(radii, counts, offsets):
    pts = [(0.0, 0.0, 0.0)]
    rings, angs = [[0]], [[0.0]]
    for r, m, off in zip(radii, counts, offsets):
        ids, aa = [], []
        for k in range(m):
            t = off + 2 * math.pi * k / m
            ids.append(len(pts))
            aa.append(t)
            pts.append((r * math.cos(t), r * math.sin(t), 0.0))
        rings.append(ids)
        angs.append(aa)
    faces = []
    first = rings[1]
    for k in range(len(first)):
        faces.append((0, first[k], first[(k + 1) % len(first)]))
    for a in range(1, len(rings) - 1):
        faces += _zip_rings(rings[a], angs[a], rings[a + 1], angs[a + 1])
    return np.array(pts), faces


def graded_disk(m=100, r_min=1e-3):
    """Radially graded triangulated unit disk with a vertex at the origin.

    Ring radii grow geometrically from ``r_min`` to 1 with ``m`` vertices per
    ring, so triangles stay close to isotropic down to the centre.
    """
    q_target = 1 + 2 * math.pi / m
    n_rings = max(2, int(round(math.log(1 / r_min) / math.log(q_target))) + 1)
    q = (1 / r_min) ** (1 / (n_rings - 1))
    radii = [r_min * q ** k for k in range(n_rings)]
    radii[-1] = 1.0
    offsets = [(k % 2) * math.pi / m for k in range(n_rings)]
    pts, faces = _ring_mesh(radii, [m] * n_rings, offsets)
    return Mesh(faces, positions=pts)


def uniform_disk(n_rings=12):
    """Triangulated unit disk with ``6 k`` vertices on ring ``k``."""
    radii = [k / n_rings for k in range(1, n_rings + 1)]
    counts = [6 * k for k in range(1, n_rings + 1)]
    offsets = [0.0] * n_rings
    pts, faces = _ring_mesh(radii, counts, offsets)
    return Mesh(faces, positions=pts)


def hemisphere(n_rings=12):
    """Upper unit hemisphere, equator as boundary (ring layout of :func:`uniform_disk`)."""
    disk = uniform_disk(n_rings)
    p = disk.positions
    rho = np.hypot(p[:, 0], p[:, 1])
    th = np.arctan2(p[:, 1], p[:, 0])
    phi = rho * math.pi / 2
    pts = np.column_stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)])
    return Mesh(disk.faces, positions=pts)


def icosphere(level=3):
    """Unit icosphere, ``20 * 4**level`` outward-oriented triangles."""
    t = (1 + math.sqrt(5)) / 2
    pts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
           (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
           (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    pts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in pts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(level):
        mid = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                p = pts[a] + pts[b]
                pts.append(p / np.linalg.norm(p))
                mid[key] = len(pts) - 1
            return mid[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return Mesh(faces, positions=np.array(pts))
