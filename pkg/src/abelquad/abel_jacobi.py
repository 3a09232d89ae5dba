"""Period matrices, the discrete Abel-Jacobi map and the quadrangulation test.

A quad mesh of genus ``g`` defines the divisor ``D_Q = sum (k_v - 4) v``.
Its conformal structure is realisable by a holomorphic quadratic
differential with simple-pole/zero pattern ``D_Q`` exactly when
``D_Q - 4 (omega)`` maps to zero in the Jacobian for a holomorphic 1-form
``omega``; :func:`verify_abel` evaluates that condition numerically.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePeriodLattice, TopologyError
from .hodge import form_zero_divisor, harmonic_basis, holomorphic_basis
from .homology import edge_chain, homology_basis, slice_mesh
from .mesh_core import Divisor, default_metric, divisor_of_quad_mesh

log = logging.getLogger(__name__)

LEAKAGE_TOL = 1e-5


@dataclass
class PeriodMatrices:
    """``A[i, j] = int_{a_i} omega_j`` and ``B[i, j] = int_{b_i} omega_j``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def genus(self):
        return self.A.shape[0]

    @property
    def tau(self):
        """Normalised period matrix ``B A^{-1}``."""
        return np.linalg.solve(self.A.T, self.B.T).T

    def symmetry_defect(self):
        t = self.tau
        return float(np.abs(t - t.T).max()) if t.size else 0.0

    def to_json(self):
        return {"A": _cmat(self.A), "B": _cmat(self.B)}


def _cmat(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]


def _cvec(v):
    return [[float(z.real), float(z.imag)] for z in np.ravel(v)]


def period_matrices(holo, basis=None):
    """Integrate every form of ``holo`` over the canonical loops."""
    basis = holo.basis if basis is None else basis
    tri = holo.metric.tri
    vals = holo.values()
    if basis.genus == 0:
        return PeriodMatrices(np.zeros((0, 0), complex), np.zeros((0, 0), complex))
    a = np.array([edge_chain(tri, lp) for lp in basis.a]) @ vals.T
    b = np.array([edge_chain(tri, lp) for lp in basis.b]) @ vals.T
    return PeriodMatrices(a, b)


def disk_potential(holo, sliced, base=0):
    """Integrals ``int_{base}^{x} omega_j`` for every vertex ``x`` of the sliced disk.

    Paths run inside the disk, so the result is single valued; ``base`` is an
    original vertex and its lowest-id copy is the starting point.
    """
    tri = holo.metric.tri
    vals = holo.values()
    disk = sliced.disk
    start = sliced.disk_vertex(base)
    pot = np.full((disk.n_vertices, vals.shape[0]), np.nan, dtype=complex)
    pot[start] = 0
    seen = np.zeros(disk.n_vertices, dtype=bool)
    seen[start] = True
    queue = deque([start])
    to_orig = sliced.to_original
    ev0 = tri.edge_vertices[:, 0]
    while queue:
        x = queue.popleft()
        for y in disk.neighbors(x):
            if seen[y]:
                continue
            seen[y] = True
            u, v = int(to_orig[x]), int(to_orig[y])
            e = tri.edge_id(u, v)
            step = vals[:, e] if ev0[e] == u else -vals[:, e]
            pot[y] = pot[x] + step
            queue.append(y)
    return pot


def abel_jacobi_point(p, base, sliced, holo, potential=None):
    """``mu(p) = int_{base}^{p} (omega_1, ..., omega_g)`` along a path in the disk."""
    pot = disk_potential(holo, sliced, base) if potential is None else potential
    return pot[sliced.disk_vertex(p)]


def abel_jacobi_divisor(D, base, sliced, holo):
    """``sum_p n_p mu(p)`` for a divisor supported on vertices."""
    pot = disk_potential(holo, sliced, base)
    out = np.zeros(holo.genus, dtype=complex)
    for site, n in D.entries:
        if not isinstance(site, int):
            raise TypeError("Abel-Jacobi map is defined on vertex divisors only")
        out += n * pot[sliced.disk_vertex(site)]
    return out


def lattice_reduce(v, periods, return_leakage=False):
    """Real coordinates of ``v`` in the lattice spanned by the period vectors.

    Solves ``v = A^T alpha + B^T beta`` with real ``alpha``, ``beta``.  The
    imaginary part of the recovered ``alpha`` measures how far the forms are
    from exact a-normalisation; it is returned as ``leakage`` on request.
    """
    A, B = np.atleast_2d(periods.A), np.atleast_2d(periods.B)
    v = np.asarray(v, dtype=complex)
    g = A.shape[0]
    if g == 0:
        out = (np.zeros(0), np.zeros(0))
        return out + (0.0,) if return_leakage else out
    im_b = B.T.imag
    if not np.isfinite(im_b).all() or np.linalg.cond(im_b) > 1e12 or np.linalg.cond(A) > 1e12:
        raise DegeneratePeriodLattice("period vectors do not span a lattice")
    beta = np.linalg.solve(im_b, v.imag)
    alpha_c = np.linalg.solve(A.T, v - B.T @ beta)
    leakage = float(np.abs(alpha_c.imag).max())
    alpha = alpha_c.real
    if return_leakage:
        return alpha, beta, leakage
    return alpha, beta


@dataclass
class VerificationReport:
    verdict: bool
    genus: int
    degree: int
    expected_degree: int
    tolerance: float
    divisor: Divisor
    zero_divisor: Divisor | None = None
    mu: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    leakage: float = 0.0
    periods: PeriodMatrices | None = None
    omega_index: int = 0
    reason: str = ""

    @property
    def max_residual(self):
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def to_json(self):
        return {
            "verdict": bool(self.verdict),
            "reason": self.reason,
            "genus": int(self.genus),
            "degree": int(self.degree),
            "expected_degree": int(self.expected_degree),
            "tolerance": float(self.tolerance),
            "omega_index": int(self.omega_index),
            "divisor": self.divisor.to_json(),
            "zero_divisor": None if self.zero_divisor is None else self.zero_divisor.to_json(),
            "mu": _cvec(self.mu),
            "alpha": [float(x) for x in self.alpha],
            "beta": [float(x) for x in self.beta],
            "residuals": [float(x) for x in self.residuals],
            "max_residual": self.max_residual,
            "leakage": float(self.leakage),
            "periods": None if self.periods is None else self.periods.to_json(),
        }


def verify_abel(mesh, D=None, tolerance=1e-3, omega_index=0, metric=None, base=0):
    """Decide whether ``D - 4 (omega)`` is principal, up to ``tolerance``.

    ``D`` defaults to the valence divisor of the quad mesh, ``metric`` to the
    unit-square metric (the embedding for non-quad meshes).
    """
    if not mesh.is_closed:
        raise TopologyError("verify_abel requires a closed surface")
    D = divisor_of_quad_mesh(mesh) if D is None else D
    g = mesh.genus
    expected = 8 * g - 8
    report = VerificationReport(False, g, D.degree, expected, tolerance, D, omega_index=omega_index)
    if D.degree != expected:
        report.reason = f"degree {D.degree} differs from 8g - 8 = {expected}"
        return report
    if g == 0:
        report.verdict = True
        report.reason = "genus 0: the degree condition is sufficient"
        return report
    if not 0 <= omega_index < g:
        raise ValueError(f"omega_index must lie in [0, {g})")
    metric = default_metric(mesh) if metric is None else metric
    basis = homology_basis(mesh)
    holo = holomorphic_basis(harmonic_basis(metric, basis), metric, basis)
    periods = period_matrices(holo, basis)
    zeros = form_zero_divisor(holo.forms[omega_index], metric)
    target = D - 4 * zeros
    sliced = slice_mesh(mesh, basis)
    mu = abel_jacobi_divisor(target, base, sliced, holo)
    alpha, beta, leak = lattice_reduce(mu, periods, return_leakage=True)
    res = np.abs(np.concatenate([alpha - np.rint(alpha), beta - np.rint(beta)]))
    report.zero_divisor = zeros
    report.mu, report.alpha, report.beta = mu, alpha, beta
    report.residuals, report.leakage, report.periods = res, leak, periods
    if leak > LEAKAGE_TOL:
        report.reason = f"imaginary leakage {leak:.3g} exceeds {LEAKAGE_TOL:g}"
    elif res.max() <= tolerance:
        report.verdict = True
        report.reason = "lattice residuals within tolerance"
    else:
        report.reason = f"max lattice residual {res.max():.3g} exceeds {tolerance:g}"
    log.info("verify_abel: g=%d residual=%.3g leak=%.2g", g, res.max(), leak)
    return report
