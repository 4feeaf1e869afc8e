"""Example surfaces with explicit homology bases.

Every generator returns ``(mesh, cycles)`` where ``cycles`` lists the closed
walks ``alpha_1 .. alpha_g, beta_1 .. beta_g`` as half-edge ids, ready for
:func:`discrete_riemann.topology.homology_basis`.

Grid surfaces are assembled from triangles with integer corner coordinates.
Two sides are glued when their midpoints coincide after applying the side
identifications and their displacement vectors are opposite.
"""
from __future__ import annotations

import numpy as np

from .mesh import build_mesh


class DegenerateEta(ValueError):
    pass


def _assemble(triangles, to_complex, canon):
    """Glue triangles with integer corners.

    Parameters
    ----------
    triangles : list of three ``(x, y)`` corner tuples, counterclockwise
    to_complex : callable ``(dx, dy) -> complex`` giving the flat displacement
    canon : callable mapping a doubled midpoint ``(X, Y)`` to its canonical
        representative under the side identifications

    Returns
    -------
    mesh, key_to_halfedge
        ``key_to_halfedge[(canon_mid, (dx, dy))]`` is the half-edge with that
        midpoint and displacement.
    """
    keys = {}
    lengths = np.empty((len(triangles), 3))
    for f, corners in enumerate(triangles):
        for i in range(3):
            (x0, y0), (x1, y1) = corners[(i + 1) % 3], corners[(i + 2) % 3]
            d = (x1 - x0, y1 - y0)
            key = (canon((x0 + x1, y0 + y1)), d)
            if key in keys:
                raise ValueError(f"duplicate half-edge {key}")
            keys[key] = 3 * f + i
            lengths[f, i] = abs(to_complex(*d))
    inv = {h: k for k, h in keys.items()}
    gluing = [[None] * 3 for _ in triangles]
    for h, (mid, d) in inv.items():
        t = keys.get((mid, (-d[0], -d[1])))
        gluing[h // 3][h % 3] = None if t is None else (t // 3, t % 3)
    return build_mesh(len(triangles), lengths, gluing), keys


def _path_halfedges(keys, canon, points):
    """Half-edges along consecutive lattice points (unit or diagonal steps)."""
    out = []
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        out.append(keys[(canon((x0 + x1, y0 + y1)), (x1 - x0, y1 - y0))])
    return out


def _split_cell(x, y, ne_diagonal=True):
    p00, p10, p11, p01 = (x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)
    if ne_diagonal:
        return [(p00, p10, p11), (p00, p11, p01)]
    return [(p00, p10, p01), (p10, p11, p01)]


def flat_torus(eta: complex, n: int = 1):
    """Flat torus ``C / (Z + eta Z)`` cut into ``n x n`` parallelograms.

    Each parallelogram is split along its shorter diagonal (the SW-NE one on
    ties).  The basis is ``alpha``: translation by 1, ``beta``: by ``eta``.
    """
    eta = complex(eta)
    if not eta.imag > 0:
        raise DegenerateEta(f"need Im eta > 0, got {eta}")
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    mesh, keys, canon, _ = _flat_torus_parts(eta, n)
    alpha = _path_halfedges(keys, canon, [(i, 0) for i in range(n + 1)])
    beta = _path_halfedges(keys, canon, [(0, j) for j in range(n + 1)])
    return mesh, [alpha, beta]


def _flat_torus_parts(eta, n):
    to_c = lambda dx, dy: (dx + dy * eta) / n  # noqa: E731
    ne = not abs(to_c(-1, 1)) < abs(to_c(1, 1))
    tris = [t for j in range(n) for i in range(n) for t in _split_cell(i, j, ne)]
    canon = lambda m: (m[0] % (2 * n), m[1] % (2 * n))  # noqa: E731
    mesh, keys = _assemble(tris, to_c, canon)
    return mesh, keys, canon, to_c


def flat_torus_edge_vectors(eta: complex, n: int = 1) -> np.ndarray:
    """Flat displacement ``z(head) - z(tail)`` of every edge of ``flat_torus(eta, n)``."""
    mesh, keys, _, to_c = _flat_torus_parts(complex(eta), int(n))
    vec = np.empty(mesh.n_halfedges, dtype=complex)
    for (_, d), h in keys.items():
        vec[h] = to_c(*d)
    return vec[mesh.edge_halfedge]


def equilateral_torus(n: int = 1):
    """Flat torus with ``eta = exp(i pi / 3)``: every face equilateral."""
    return flat_torus(np.exp(1j * np.pi / 3), n)


def pyramid():
    """Lateral surface of a square pyramid with opposite base sides glued.

    Faces ``f_k = (V_k, V_{k+1}, P)`` are unit equilateral triangles.  Lateral
    sides are glued around the apex; base side ``V_0 V_1`` is glued to
    ``V_2 V_3`` and ``V_1 V_2`` to ``V_3 V_0``.  The result is a torus with two
    vertices: the apex (angle ``4 pi / 3``) and the base vertex (``8 pi / 3``).
    """
    gluing = [[None] * 3 for _ in range(4)]
    for k in range(4):
        gluing[k][0] = ((k + 1) % 4, 1)
        gluing[(k + 1) % 4][1] = (k, 0)
    gluing[0][2], gluing[2][2] = (2, 2), (0, 2)
    gluing[1][2], gluing[3][2] = (3, 2), (1, 2)
    mesh = build_mesh(4, np.ones((4, 3)), gluing)
    # alpha along V0 -> V1, beta along V1 -> V2 (both closed through the base vertex)
    return mesh, [[2], [5]]


# Three unit squares A = [0,1]^2, B = [1,2]x[0,1], C = [1,2]x[1,2] with the
# side identifications (all translations):
#   top of A      ~ bottom of A
#   top of C      ~ bottom of B
#   right of C    ~ left of C
#   right of B    ~ left of A
# All twelve square corners become one cone point of angle 6 pi.
GENUS2_GLUING = (
    ("A top", "A bottom", (0, -1)),
    ("C top", "B bottom", (0, -2)),
    ("C right", "C left", (-1, 0)),
    ("B right", "A left", (-2, 0)),
)


def _genus2_canon(m):
    M = 2 * m

    def canon(mid):
        X, Y = mid
        if Y == M and 0 < X < M:
            return (X, 0)
        if Y == 2 * M and M < X < 2 * M:
            return (X, 0)
        if X == 2 * M and M < Y < 2 * M:
            return (M, Y)
        if X == 2 * M and 0 < Y < M:
            return (0, Y)
        return (X, Y)

    return canon


def genus2_squares(n: int, equilateral: bool = False):
    """Genus-2 surface glued from three unit squares.

    Each unit square is divided into ``(n/2) x (n/2)`` grid squares, each cut
    by its SW-NE diagonal, so the grid step is ``2/n``.  The cone point has
    angle ``6 pi``.

    With ``equilateral=True`` all sides get length 1 (same combinatorics);
    that intrinsic surface is strictly Delaunay.

    Basis (grid coordinates, ``m = n/2`` steps per unit)::

        alpha_1: y = m,  x from 0 to m      (top of A, rightward)
        alpha_2: y = 0,  x from 0 to 2m     (bottom of A then B, rightward)
        beta_1:  x = m,  y from 2m to m     (left of C, downward)
        beta_2:  x = m,  y from 0 to 2m     (A|B seam then left of C, upward)

    In this basis the period matrix of the continuous surface is
    ``(i/3) [[5, -4], [-4, 5]]`` (:data:`GENUS2_PERIOD_MATRIX`).
    """
    n = int(n)
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    m = n // 2
    cells = [(x, y) for y in range(m) for x in range(m)]
    cells += [(x, y) for y in range(m) for x in range(m, 2 * m)]
    cells += [(x, y) for y in range(m, 2 * m) for x in range(m, 2 * m)]
    tris = [t for x, y in cells for t in _split_cell(x, y)]
    if equilateral:
        to_c = lambda dx, dy: 1.0  # noqa: E731
    else:
        to_c = lambda dx, dy: complex(dx, dy) / m  # noqa: E731
    canon = _genus2_canon(m)
    mesh, keys = _assemble(tris, to_c, canon)
    path = lambda pts: _path_halfedges(keys, canon, pts)  # noqa: E731
    a1 = path([(x, m) for x in range(m + 1)])
    a2 = path([(x, 0) for x in range(2 * m + 1)])
    b1 = path([(m, y) for y in range(2 * m, m - 1, -1)])
    b2 = path([(m, y) for y in range(2 * m + 1)])
    return mesh, [a1, a2, b1, b2]


GENUS2_PERIOD_MATRIX = (1j / 3) * np.array([[5, -4], [-4, 5]])

GENERATORS = {
    "flat_torus": flat_torus,
    "equilateral_torus": equilateral_torus,
    "pyramid": pyramid,
    "genus2_squares": genus2_squares,
}
