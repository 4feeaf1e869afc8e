"""Discrete Riemann surfaces: period matrices, Abelian integrals and Riemann-Roch on glued triangle meshes."""
from .mesh import SurfaceMesh, build_mesh, cotan_weights, geometry_report, read_mesh, write_mesh
from .topology import HomologyData, homology_basis
from .harmonic import MultiValuedField, conjugate_function, solve_harmonic
from .periods import PeriodBundle, period_bundle, solve_first_kind
from .abelian import Divisor, riemann_roch, solve_second_kind, solve_third_kind
from .quad import build_quad_surface

__all__ = [
    "SurfaceMesh",
    "build_mesh",
    "cotan_weights",
    "geometry_report",
    "read_mesh",
    "write_mesh",
    "HomologyData",
    "homology_basis",
    "MultiValuedField",
    "conjugate_function",
    "solve_harmonic",
    "PeriodBundle",
    "period_bundle",
    "solve_first_kind",
    "Divisor",
    "riemann_roch",
    "solve_second_kind",
    "solve_third_kind",
    "build_quad_surface",
]
