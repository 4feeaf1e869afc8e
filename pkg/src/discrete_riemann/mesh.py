"""Closed polyhedral surfaces glued from flat triangles.

A surface is stored as a Delta-complex: a list of triangles with intrinsic
side lengths and an involution pairing every side with another side.  Multi
edges, loop edges and self-glued faces are all allowed, which is what the
one-vertex torus and the glued pyramid need.

Half-edge numbering
-------------------
Face ``f`` has corners ``0, 1, 2`` in counterclockwise order.  Side ``i`` is
the side opposite corner ``i``; as a half-edge ``h = 3 * f + i`` it runs from
corner ``(i + 1) % 3`` (tail) to corner ``(i + 2) % 3`` (head), so face ``f``
lies to its left.  An oriented edge of the surface *is* a half-edge, and the
reversed edge is ``twin[h]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class MeshError(ValueError):
    """Base class for rejected surface descriptions."""


class UnpairedSide(MeshError):
    pass


class LengthMismatch(MeshError):
    pass


class TriangleInequalityViolated(MeshError):
    pass


class NonOrientable(MeshError):
    pass


class Disconnected(MeshError):
    pass


class HasBoundary(MeshError):
    pass


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Validated closed oriented triangle complex.

    Build instances with :func:`build_mesh`; the constructor does no checking.

    Attributes
    ----------
    lengths : (F, 3) float
        ``lengths[f, i]`` is the length of the side opposite corner ``i``.
    twin : (3F,) int
        Half-edge gluing involution.
    corner_vertex : (F, 3) int
        Vertex id of every corner.
    n_vertices : int
    edge_halfedge : (E,) int
        Representative half-edge of each unoriented edge (the smaller id).
    halfedge_edge : (3F,) int
    halfedge_sign : (3F,) int
        ``+1`` if the half-edge is its edge's representative, else ``-1``.
    """

    lengths: np.ndarray
    twin: np.ndarray
    corner_vertex: np.ndarray
    n_vertices: int
    edge_halfedge: np.ndarray
    halfedge_edge: np.ndarray
    halfedge_sign: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- sizes ---------------------------------------------------------------
    @property
    def n_faces(self) -> int:
        return self.lengths.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_halfedge.shape[0]

    @property
    def n_halfedges(self) -> int:
        return 3 * self.n_faces

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    # -- half-edge accessors (vectorised) -------------------------------------
    def tail(self, h):
        h = np.asarray(h)
        return self.corner_vertex[h // 3, (h % 3 + 1) % 3]

    def head(self, h):
        h = np.asarray(h)
        return self.corner_vertex[h // 3, (h % 3 + 2) % 3]

    def left(self, h):
        return np.asarray(h) // 3

    def right(self, h):
        return self.twin[np.asarray(h)] // 3

    def length(self, h):
        h = np.asarray(h)
        return self.lengths[h // 3, h % 3]

    def next_ccw(self, h):
        """Next half-edge counterclockwise around the tail of ``h``."""
        h = np.asarray(h)
        return self.twin[3 * (h // 3) + (h % 3 + 2) % 3]

    def next_cw(self, h):
        """Next half-edge clockwise around the tail of ``h``."""
        t = self.twin[np.asarray(h)]
        return 3 * (t // 3) + (t % 3 + 1) % 3

    def face_halfedges(self, f):
        return 3 * f + np.arange(3)

    # -- per-edge arrays in representative orientation -----------------------
    @property
    def edge_tail(self) -> np.ndarray:
        return self._memo("edge_tail", lambda: _frozen(self.tail(self.edge_halfedge)))

    @property
    def edge_head(self) -> np.ndarray:
        return self._memo("edge_head", lambda: _frozen(self.head(self.edge_halfedge)))

    @property
    def edge_left(self) -> np.ndarray:
        return self._memo("edge_left", lambda: _frozen(self.edge_halfedge // 3))

    @property
    def edge_right(self) -> np.ndarray:
        return self._memo("edge_right", lambda: _frozen(self.twin[self.edge_halfedge] // 3))

    @property
    def edge_length(self) -> np.ndarray:
        return self._memo("edge_length", lambda: _frozen(self.length(self.edge_halfedge)))

    def outgoing(self, v) -> np.ndarray:
        """Half-edges with tail ``v`` in counterclockwise order."""
        tails = self._memo("halfedge_tail", lambda: _frozen(self.tail(np.arange(self.n_halfedges))))
        start = int(np.flatnonzero(tails == v)[0])
        ring = [start]
        h = int(self.next_ccw(start))
        while h != start:
            ring.append(h)
            h = int(self.next_ccw(h))
        return np.array(ring)

    # -- geometry --------------------------------------------------------------
    @property
    def face_area(self) -> np.ndarray:
        def compute():
            a, b, c = self.lengths.T
            s = 0.5 * (a + b + c)
            return _frozen(np.sqrt(s * (s - a) * (s - b) * (s - c)))

        return self._memo("face_area", compute)

    @property
    def corner_cot(self) -> np.ndarray:
        """Cotangent of every corner angle, shape (F, 3)."""

        def compute():
            L2 = self.lengths**2
            a2, b2, c2 = L2[:, 0], L2[:, 1], L2[:, 2]
            four_area = 4.0 * self.face_area
            cot = np.stack([b2 + c2 - a2, c2 + a2 - b2, a2 + b2 - c2], axis=1)
            return _frozen(cot / four_area[:, None])

        return self._memo("corner_cot", compute)

    @property
    def corner_angle(self) -> np.ndarray:
        """Corner angles by the law of cosines, shape (F, 3)."""

        def compute():
            L = self.lengths
            a, b, c = L[:, 0], L[:, 1], L[:, 2]
            cosines = np.stack(
                [
                    (b * b + c * c - a * a) / (2 * b * c),
                    (c * c + a * a - b * b) / (2 * c * a),
                    (a * a + b * b - c * c) / (2 * a * b),
                ],
                axis=1,
            )
            return _frozen(np.arccos(cosines))

        return self._memo("corner_angle", compute)

    @property
    def total_area(self) -> float:
        return float(self.face_area.sum())

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]


def build_mesh(triangles, side_lengths, gluing) -> SurfaceMesh:
    """Validate a glued triangle complex and derive its combinatorics.

    Parameters
    ----------
    triangles : int or sequence
        Number of faces, or any sequence with one entry per face (only its
        length is used: corners are identified through the gluing).
    side_lengths : (F, 3) array_like
        Side ``i`` is opposite corner ``i``.
    gluing : (F, 3, 2) array_like
        ``gluing[f][i] = (g, j)`` glues side ``i`` of face ``f`` to side ``j``
        of face ``g``, reversing orientation.  ``None`` or a negative face
        index marks an unglued side.

    Raises
    ------
    HasBoundary, UnpairedSide, LengthMismatch, TriangleInequalityViolated,
    Disconnected
    """
    n_faces = triangles if isinstance(triangles, (int, np.integer)) else len(triangles)
    lengths = np.asarray(side_lengths, dtype=float).reshape(-1, 3)
    if lengths.shape[0] != n_faces:
        raise ValueError(f"expected {n_faces} rows of side lengths, got {lengths.shape[0]}")
    if n_faces == 0:
        raise ValueError("empty mesh")

    nh = 3 * n_faces
    twin = np.full(nh, -1, dtype=np.int64)
    for f in range(n_faces):
        for i in range(3):
            target = gluing[f][i]
            if target is None or target[0] is None or int(target[0]) < 0:
                raise HasBoundary(f"side {i} of face {f} is not glued")
            g, j = int(target[0]), int(target[1])
            if not (0 <= g < n_faces and 0 <= j < 3):
                raise UnpairedSide(f"side {i} of face {f} glued to nonexistent side {g}:{j}")
            twin[3 * f + i] = 3 * g + j
    return _from_twin(lengths, twin)


def _from_twin(lengths: np.ndarray, twin: np.ndarray) -> SurfaceMesh:
    n_faces = lengths.shape[0]
    nh = 3 * n_faces
    h = np.arange(nh)
    if np.any(twin == h):
        bad = int(np.flatnonzero(twin == h)[0])
        raise UnpairedSide(f"side {bad % 3} of face {bad // 3} is glued to itself")
    if np.any(twin[twin] != h):
        bad = int(np.flatnonzero(twin[twin] != h)[0])
        raise UnpairedSide(f"gluing is not an involution at side {bad % 3} of face {bad // 3}")

    if np.any(lengths <= 0) or not np.all(np.isfinite(lengths)):
        raise TriangleInequalityViolated("side lengths must be positive and finite")
    a, b, c = lengths.T
    if np.any(a >= b + c) or np.any(b >= c + a) or np.any(c >= a + b):
        bad = int(np.flatnonzero((a >= b + c) | (b >= c + a) | (c >= a + b))[0])
        raise TriangleInequalityViolated(f"face {bad} with sides {lengths[bad].tolist()}")

    flat = lengths.reshape(-1)
    mism = np.abs(flat - flat[twin]) > 1e-9 * np.maximum(flat, flat[twin])
    if np.any(mism):
        bad = int(np.flatnonzero(mism)[0])
        raise LengthMismatch(
            f"side {bad % 3} of face {bad // 3} (length {flat[bad]}) glued to side "
            f"{twin[bad] % 3} of face {twin[bad] // 3} (length {flat[twin[bad]]})"
        )

    # faces connected through gluings
    adj = coo_matrix((np.ones(nh), (h // 3, twin // 3)), shape=(n_faces, n_faces))
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise Disconnected(f"surface has {n_comp} connected components")

    # corners: tail corner of h is identified with the head corner of twin[h]
    corner = lambda hh, k: 3 * (hh // 3) + (hh % 3 + k) % 3  # noqa: E731
    tail_c = corner(h, 1)
    head_c_twin = corner(twin, 2)
    cadj = coo_matrix((np.ones(nh), (tail_c, head_c_twin)), shape=(nh, nh))
    n_vertices, labels = connected_components(cadj, directed=False)
    corner_vertex = labels.reshape(n_faces, 3)

    rep = h < twin
    edge_halfedge = h[rep]
    halfedge_edge = np.empty(nh, dtype=np.int64)
    halfedge_edge[edge_halfedge] = np.arange(edge_halfedge.size)
    halfedge_edge[twin[edge_halfedge]] = np.arange(edge_halfedge.size)
    halfedge_sign = np.where(rep, 1, -1)

    mesh = SurfaceMesh(
        lengths=_frozen(lengths.copy()),
        twin=_frozen(twin),
        corner_vertex=_frozen(corner_vertex),
        n_vertices=int(n_vertices),
        edge_halfedge=_frozen(edge_halfedge),
        halfedge_edge=_frozen(halfedge_edge),
        halfedge_sign=_frozen(halfedge_sign),
    )
    if mesh.euler_characteristic % 2:
        raise NonOrientable(f"odd Euler characteristic {mesh.euler_characteristic}")
    return mesh


def from_indexed_triangles(points, faces) -> SurfaceMesh:
    """Import an indexed triangle mesh with 3D (or 2D) coordinates.

    Coordinates are only used to compute side lengths and are then dropped.
    Every directed edge ``(a, b)`` of a face must be matched by exactly one
    ``(b, a)`` in another face.
    """
    points = np.asarray(points, dtype=float)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    n_faces = faces.shape[0]
    lengths = np.empty((n_faces, 3))
    directed: dict[tuple[int, int], int] = {}
    for f, (p0, p1, p2) in enumerate(faces):
        corners = (p0, p1, p2)
        for i in range(3):
            a, b = int(corners[(i + 1) % 3]), int(corners[(i + 2) % 3])
            lengths[f, i] = np.linalg.norm(points[a] - points[b])
            if (a, b) in directed:
                raise NonOrientable(f"edge {a}->{b} is traversed twice in the same direction")
            directed[(a, b)] = 3 * f + i
    twin = np.full(3 * n_faces, -1, dtype=np.int64)
    for (a, b), hid in directed.items():
        other = directed.get((b, a))
        if other is None:
            raise HasBoundary(f"edge {a}-{b} has only one adjacent face")
        twin[hid] = other
    return _from_twin(lengths, twin)


def cotan_weights(mesh: SurfaceMesh) -> np.ndarray:
    """Cotan weight ``(cot alpha + cot beta) / 2`` of every unoriented edge."""
    cot = mesh.corner_cot.reshape(-1)
    h = mesh.edge_halfedge
    return 0.5 * (cot[h] + cot[mesh.twin[h]])


def opposite_angles(mesh: SurfaceMesh) -> tuple[np.ndarray, np.ndarray]:
    """Angles opposite each edge in its left and right face."""
    ang = mesh.corner_angle.reshape(-1)
    h = mesh.edge_halfedge
    return ang[h], ang[mesh.twin[h]]


@dataclass(frozen=True)
class GeometryReport:
    genus: int
    max_edge_length: float
    min_angle: float
    aperture: np.ndarray
    gamma_vertex: np.ndarray
    gamma_S: float
    is_delaunay: bool
    delaunay_margin: float

    @property
    def h(self) -> float:
        return self.max_edge_length


def vertex_apertures(mesh: SurfaceMesh) -> np.ndarray:
    return np.bincount(
        mesh.corner_vertex.reshape(-1),
        weights=mesh.corner_angle.reshape(-1),
        minlength=mesh.n_vertices,
    )


def geometry_report(mesh: SurfaceMesh, *, delaunay_tol: float = 1e-12) -> GeometryReport:
    aperture = vertex_apertures(mesh)
    gamma_v = 2 * np.pi / aperture
    alpha, beta = opposite_angles(mesh)
    margin = float(np.min(np.pi - alpha - beta))
    return GeometryReport(
        genus=mesh.genus,
        max_edge_length=float(mesh.lengths.max()),
        min_angle=float(mesh.corner_angle.min()),
        aperture=aperture,
        gamma_vertex=gamma_v,
        gamma_S=float(min(1.0, gamma_v.min())),
        is_delaunay=bool(margin >= -delaunay_tol),
        delaunay_margin=margin,
    )


# -- text format ------------------------------------------------------------------

def format_mesh(mesh: SurfaceMesh) -> str:
    """Serialize to the text mesh format (see :func:`parse_mesh`)."""
    lines = [f"# glued triangle mesh: {mesh.n_faces} faces"]
    for f in range(mesh.n_faces):
        lens = " ".join(repr(float(x)) for x in mesh.lengths[f])
        glue = " ".join(f"{t // 3}:{t % 3}" for t in mesh.twin[3 * f : 3 * f + 3])
        lines.append(f"{lens}  {glue}")
    return "\n".join(lines) + "\n"


def parse_mesh(text: str) -> SurfaceMesh:
    """Parse the text mesh format.

    One record per face, in face order::

        l0 l1 l2  g0:s0 g1:s1 g2:s2

    ``li`` is the length of the side opposite corner ``i`` and ``gi:si`` names
    the side it is glued to.  ``#`` starts a comment; blank lines and extra
    whitespace are ignored.
    """
    lengths, gluing = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 6:
            raise ValueError(f"line {lineno}: expected 6 fields, got {len(tok)}")
        try:
            lengths.append([float(t) for t in tok[:3]])
            sides = []
            for t in tok[3:]:
                g, s = t.split(":")
                sides.append((int(g), int(s)))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        gluing.append(sides)
    return build_mesh(len(lengths), lengths, gluing)


def read_mesh(path) -> SurfaceMesh:
    with open(path) as fh:
        return parse_mesh(fh.read())


def write_mesh(mesh: SurfaceMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_mesh(mesh))


def read_obj(path) -> SurfaceMesh:
    """Read ``v``/``f`` records of a Wavefront OBJ file (triangles only)."""
    points, faces = [], []
    with open(path) as fh:
        for raw in fh:
            tok = raw.split()
            if not tok:
                continue
            if tok[0] == "v":
                points.append([float(x) for x in tok[1:4]])
            elif tok[0] == "f":
                idx = [int(t.split("/")[0]) for t in tok[1:]]
                if len(idx) != 3:
                    raise ValueError("only triangular faces are supported")
                faces.append([i - 1 if i > 0 else len(points) + i for i in idx])
    return from_indexed_triangles(points, faces)
