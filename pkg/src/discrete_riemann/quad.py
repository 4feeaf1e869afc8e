"""Delaunay-Voronoi quadrangulation and discrete analyticity on quad-surfaces.

Every edge ``e`` of a Delaunay triangulation spans a kite with the
circumcenters of its two faces.  Its chart is built by developing the two
faces into one plane with ``t_e`` at 0 and ``h_e`` on the positive real axis,
and the corners are listed counterclockwise::

    z1 = t_e,   z2 = circumcenter of the right face,
    z3 = h_e,   z4 = circumcenter of the left face.

Vertices of the mesh are black quad vertices and circumcenters are white.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .harmonic import MultiValuedField
from .mesh import SurfaceMesh, cotan_weights, geometry_report, opposite_angles
from .topology import HomologyData


class NotDelaunay(ValueError):
    pass


class NonPositiveQuadArea(ValueError):
    pass


class DegenerateDiagonal(ValueError):
    pass


def face_charts(mesh: SurfaceMesh) -> np.ndarray:
    """Planar positions of the three corners of every face, shape (F, 3).

    Corner 0 at the origin, corner 1 on the positive real axis, corner 2 in
    the upper half plane.
    """
    a, b, c = mesh.lengths.T  # sides opposite corners 0, 1, 2
    x2 = (b * b + c * c - a * a) / (2 * c)
    y2 = np.sqrt(np.maximum(b * b - x2 * x2, 0.0))
    return np.stack([np.zeros_like(c), c + 0j, x2 + 1j * y2], axis=1)


@dataclass(frozen=True)
class Circumcenters:
    center: np.ndarray  # (F,) complex, in the frame of face_charts
    radius: np.ndarray  # (F,)

    @property
    def h_prime(self) -> float:
        return float(2 * self.radius.max())


def circumcenters(mesh: SurfaceMesh, report=None, tol: float = 1e-12) -> Circumcenters:
    """Circumcenter and circumradius of every face in its own chart.

    Raises :class:`NotDelaunay` unless every edge has opposite angles summing
    to strictly less than pi.
    """
    if report is None:
        report = geometry_report(mesh)
    if report.delaunay_margin <= tol:
        raise NotDelaunay(f"condition (D) fails: margin {report.delaunay_margin:.3g}")
    P = face_charts(mesh)
    p1, p2 = P[:, 1], P[:, 2]
    d = 2 * (p1.real * p2.imag - p2.real * p1.imag)
    n1, n2 = np.abs(p1) ** 2, np.abs(p2) ** 2
    ux = (p2.imag * n1 - p1.imag * n2) / d
    uy = (p1.real * n2 - p2.real * n1) / d
    a, b, c = mesh.lengths.T
    radius = a * b * c / (4 * mesh.face_area)
    return Circumcenters(ux + 1j * uy, radius)


@dataclass(frozen=True, eq=False)
class QuadSurface:
    mesh: SurfaceMesh
    charts: np.ndarray  # (E, 4) complex: z1 = t, z2 = right center, z3 = h, z4 = left center
    areas: np.ndarray  # (E,)
    h_prime: float

    @property
    def n_quads(self) -> int:
        return self.charts.shape[0]

    def to_dict(self) -> dict:
        m = self.mesh
        quads = []
        for e in range(self.n_quads):
            quads.append(
                {
                    "edge": e,
                    "black": [int(m.edge_tail[e]), int(m.edge_head[e])],
                    "white": [int(m.edge_right[e]), int(m.edge_left[e])],
                    "chart": [[float(z.real), float(z.imag)] for z in self.charts[e]],
                    "area": float(self.areas[e]),
                }
            )
        return {"n_quads": self.n_quads, "h_prime": self.h_prime, "quads": quads}


def _shoelace(z: np.ndarray) -> np.ndarray:
    zn = np.roll(z, -1, axis=1)
    return 0.5 * np.sum(z.real * zn.imag - zn.real * z.imag, axis=1)


def build_quad_surface(mesh: SurfaceMesh, w=None, rel_tol: float = 1e-10) -> QuadSurface:
    """Quadrangulate a strictly Delaunay triangulation by its circumradii.

    The kite areas are checked against ``L^2 w / 2`` for the edge weights ``w``
    (cotangent weights of ``mesh`` by default) and against the surface area.
    """
    report = geometry_report(mesh)
    cc = circumcenters(mesh, report)
    L = mesh.edge_length
    alpha, beta = opposite_angles(mesh)  # angle in the left and right face
    zl = L / 2 + 1j * (L / 2) / np.tan(alpha)
    zr = L / 2 - 1j * (L / 2) / np.tan(beta)
    charts = np.stack([np.zeros_like(L) + 0j, zr, L + 0j, zl], axis=1)
    areas = _shoelace(charts)
    if w is None:
        w = cotan_weights(mesh)
    expected = L * L * np.asarray(w, dtype=float) / 2
    if np.any(areas <= 0):
        e = int(np.argmin(areas))
        raise NonPositiveQuadArea(f"quad of edge {e} has area {areas[e]:.3g}")
    if np.max(np.abs(areas - expected)) > rel_tol * max(1.0, float(expected.max())):
        raise NonPositiveQuadArea("quad areas disagree with the cotangent formula")
    total = mesh.total_area
    if abs(areas.sum() - total) > rel_tol * total:
        raise NonPositiveQuadArea(f"quad areas sum to {areas.sum()!r}, surface area {total!r}")
    return QuadSurface(mesh, charts, areas, cc.h_prime)


# -- functions on the quad-surface ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadFunction:
    """Complex values on black (vertices) and white (faces) quad vertices,
    with black and white period vectors ``(A_1 .. A_g, B_1 .. B_g)``."""

    black: np.ndarray
    white: np.ndarray
    black_periods: np.ndarray
    white_periods: np.ndarray

    def __add__(self, other):
        return QuadFunction(
            self.black + other.black,
            self.white + other.white,
            self.black_periods + other.black_periods,
            self.white_periods + other.white_periods,
        )

    def __mul__(self, s):
        return QuadFunction(s * self.black, s * self.white, s * self.black_periods, s * self.white_periods)

    __rmul__ = __mul__


def to_quad_function(f, g: int | None = None) -> QuadFunction:
    """``u`` on black vertices and ``i v`` on white ones.

    ``f`` is a :class:`MultiValuedField` with both parts, or a pair ``(u, v)``
    of single-valued arrays (then ``g`` gives the period length).
    """
    if isinstance(f, MultiValuedField):
        return QuadFunction(
            f.u_base.astype(complex),
            1j * f.v_base,
            f.p_re.astype(complex),
            1j * f.p_im,
        )
    u, v = f
    n = 2 * (g or 0)
    return QuadFunction(np.asarray(u, dtype=complex), 1j * np.asarray(v, dtype=float), np.zeros(n, complex), np.zeros(n, complex))


def quad_values(Q: QuadSurface, f: QuadFunction, hd: HomologyData) -> np.ndarray:
    """Values at ``z1 .. z4`` of every quad, lifted consistently inside the quad."""
    m = Q.mesh
    h = m.edge_halfedge
    k = hd.kappa_of(h)
    ks = hd.kappa_star_of(h)
    f1 = f.black[m.edge_tail]
    f3 = f1 + (f.black[m.edge_head] - f.black[m.edge_tail]) + k @ f.black_periods
    f2 = f.white[m.edge_right]
    f4 = f2 + (f.white[m.edge_left] - f.white[m.edge_right]) + ks @ f.white_periods
    return np.stack([f1, f2, f3, f4], axis=1)


def chart_analyticity_residuals(charts: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Difference of the two diagonal difference quotients per quad."""
    d13 = charts[:, 0] - charts[:, 2]
    d24 = charts[:, 1] - charts[:, 3]
    if np.any(d13 == 0) or np.any(d24 == 0):
        raise DegenerateDiagonal("a quad has a zero-length diagonal")
    return (values[:, 0] - values[:, 2]) / d13 - (values[:, 1] - values[:, 3]) / d24


def quad_analyticity_residuals(Q: QuadSurface, f: QuadFunction, hd: HomologyData) -> np.ndarray:
    return chart_analyticity_residuals(Q.charts, quad_values(Q, f, hd))


def quad_bilinear_sides(Q: QuadSurface, f: QuadFunction, f2: QuadFunction, hd: HomologyData):
    """Both sides of the bilinear identity on the quad-surface (complex)."""
    a = quad_values(Q, f, hd)
    b = quad_values(Q, f2, hd)
    lhs = np.sum((a[:, 0] - a[:, 2]) * (b[:, 1] - b[:, 3]) - (a[:, 1] - a[:, 3]) * (b[:, 0] - b[:, 2]))
    g = hd.g
    A, B = f.black_periods[:g], f.black_periods[g:]
    AA, BB = f.white_periods[:g], f.white_periods[g:]
    A2, B2 = f2.black_periods[:g], f2.black_periods[g:]
    AA2, BB2 = f2.white_periods[:g], f2.white_periods[g:]
    rhs = np.sum(A * BB2 - BB * A2 + AA * B2 - B * AA2)
    return complex(lhs), complex(rhs)


def quad_bilinear_residual(Q, f, f2, hd) -> float:
    lhs, rhs = quad_bilinear_sides(Q, f, f2, hd)
    return abs(lhs - rhs)


def quad_period_matrix(phi, phi_star) -> np.ndarray:
    """Period matrix of the induced quad-surface from first-kind integrals.

    The quad integral with black and white A-periods ``e_l`` is
    ``q(phi_l) - i q(phi*_l)``; column ``l`` of the result is the mean of its
    black and white B-periods.
    """
    g = len(phi)
    out = np.empty((g, g), dtype=complex)
    for l in range(g):
        q = to_quad_function(phi[l]) + (-1j) * to_quad_function(phi_star[l])
        out[:, l] = 0.5 * (q.black_periods[g:] + q.white_periods[g:])
    return out
