"""Discrete Abel-Jacobi tests for quad meshes and quartic-differential texturing."""

__version__ = "0.1.0"

from .abel_jacobi import (PeriodMatrices, VerificationReport, abel_jacobi_divisor,  # noqa: E402
                          abel_jacobi_point, lattice_reduce, period_matrices, verify_abel)
from .errors import *  # noqa: E402,F401,F403
from .hodge import (DiscreteOneForm, HolomorphicFormBasis, form_zero_divisor,  # noqa: E402
                    harmonic_basis, holomorphic_basis)
from .homology import (HomologyBasis, Loop, SlicedMesh, canonicalize, homology_basis,  # noqa: E402
                       intersection_matrix, raw_generators, slice_mesh)
from .mesh_core import (Divisor, Mesh, MetricMesh, default_metric, divisor_of_quad_mesh,  # noqa: E402
                        embedded_metric, gauss_bonnet_report, load_mesh, quad_metric, save_obj)
from .quartic import (ConformalChart, CutGraph, RationalQuartic, UVAtlas,  # noqa: E402
                      build_rational_quartic, conformal_flatten, export_obj_with_uv,
                      integrate_fourth_root, load_singularities, singular_cut_graph)
