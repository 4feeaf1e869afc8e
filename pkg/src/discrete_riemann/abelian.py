"""Integrals of the second kind, differentials of the third kind, divisors and
the discrete Riemann-Roch theorem.

An edge differential ``omega`` is an antisymmetric function on oriented edges,
stored by its values on representative half-edges.  Its residue at a vertex
``z`` is ``i * sum_{head(e) = z} c(e) omega(e)``; :func:`residues` returns the
real coefficient of ``i``.  Its residue at a face is the counterclockwise sum
around the face.
"""
from __future__ import annotations

from dataclasses import dataclass
import json

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .harmonic import MultiValuedField, SolverFailure, dual_difference, edge_difference
from .mesh import SurfaceMesh
from .periods import PeriodBundle, analytic_system, energy_matrix, first_kind_basis, period_matrices_from_energy
from .topology import HomologyData


class BrokenChain(ValueError):
    pass


class CoincidentPoles(ValueError):
    pass


class NotAdmissible(ValueError):
    pass


class TooLarge(ValueError):
    pass


class RankAmbiguous(np.linalg.LinAlgError):
    pass


# -- edge differentials ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EdgeDifferential:
    mesh: SurfaceMesh
    values: np.ndarray  # (E,) on representative half-edges

    def at(self, h):
        h = np.asarray(h)
        return self.mesh.halfedge_sign[h] * self.values[self.mesh.halfedge_edge[h]]

    def __add__(self, other):
        return EdgeDifferential(self.mesh, self.values + other.values)

    def __mul__(self, s):
        return EdgeDifferential(self.mesh, s * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


@dataclass(frozen=True, eq=False)
class MeromorphicFunction:
    """Single-valued pair: ``re`` on vertices, ``im`` on faces."""

    re: np.ndarray
    im: np.ndarray

    @classmethod
    def from_field(cls, f: MultiValuedField, tol: float = 1e-9):
        scale = max(1.0, float(np.max(np.abs(f.u_base))), float(np.max(np.abs(f.v_base))))
        if np.max(np.abs(f.p_re)) > tol * scale or np.max(np.abs(f.p_im)) > tol * scale:
            raise ValueError("field has nonzero periods")
        return cls(f.u_base.copy(), f.v_base.copy())

    def as_field(self, g: int) -> MultiValuedField:
        return MultiValuedField(self.re, np.zeros(2 * g), self.im, np.zeros(2 * g))


def differential_of(f: MultiValuedField, hd: HomologyData) -> EdgeDifferential:
    """``df(e) = Re f(head) - Re f(tail)``, transported across periods."""
    return EdgeDifferential(hd.mesh, edge_difference(f, hd))


def edge_residue(f, w, hd: HomologyData, e=None):
    """``res_e f = Im f(r) - Im f(l) + c(e) (Re f(h) - Re f(t))``.

    ``f`` may be a :class:`MultiValuedField` or a :class:`MeromorphicFunction`;
    ``e=None`` returns all edges in representative orientation.
    """
    if isinstance(f, MeromorphicFunction):
        f = f.as_field(hd.g)
    m = hd.mesh
    h = m.edge_halfedge if e is None else np.asarray(e)
    c = w[m.halfedge_edge[h]]
    return c * edge_difference(f, hd, h) - dual_difference(f, hd, h)


def residues(omega: EdgeDifferential, w):
    """Vertex and face residues of an edge differential.

    Returns ``(vertex, face)``: the vertex residue at ``z`` is ``1j * vertex[z]``
    and the face residue at ``x`` is ``face[x]``.
    """
    m = omega.mesh
    flux = w * omega.values
    vertex = np.bincount(m.edge_head, weights=flux, minlength=m.n_vertices) - np.bincount(
        m.edge_tail, weights=flux, minlength=m.n_vertices
    )
    face = omega.at(np.arange(m.n_halfedges)).reshape(-1, 3).sum(axis=1)
    return vertex, face


def integrate(omega: EdgeDifferential, path, w=None, kind: str = "primal") -> float:
    """Integral of ``omega`` along a path.

    kind="primal"
        ``path`` is a list of half-edges; the integral is the sum of values.
    kind="faces"
        ``path`` is a chain of faces, consecutive faces sharing exactly one
        side.  Passing from face ``x`` to face ``y`` across side ``e``, oriented
        with ``x`` on its left, contributes ``c(e) omega(e)``.
    kind="crossings"
        ``path`` lists crossed half-edges, each crossed from its right face
        to its left face; each contributes ``c(e) omega(e)``.
    """
    m = omega.mesh
    if kind == "primal":
        return float(np.sum(omega.at(np.asarray(path, dtype=np.int64)))) if len(path) else 0.0
    if w is None:
        raise ValueError("dual integration needs edge weights")
    if kind == "crossings":
        h = np.asarray(path, dtype=np.int64)
        return float(np.sum(w[m.halfedge_edge[h]] * omega.at(h))) if h.size else 0.0
    if kind != "faces":
        raise ValueError(f"unknown path kind {kind!r}")
    total = 0.0
    for x, y in zip(path[:-1], path[1:]):
        shared = [h for h in range(3 * x, 3 * x + 3) if m.twin[h] // 3 == y]
        if len(shared) != 1:
            what = "share no side" if not shared else "share several sides"
            raise BrokenChain(f"faces {x} and {y} {what}")
        h = shared[0]
        total += float(w[m.halfedge_edge[h]] * omega.at(h))
    return total


# -- second kind ------------------------------------------------------------------------------

def solve_second_kind(mesh, w, hd: HomologyData, e: int, anchors=(0, 0), residue: float = 1.0) -> MultiValuedField:
    """Integral of the second kind with vanishing A-periods, single pole at ``e``.

    The pole has residue ``residue`` (1 by default); the B-periods are in the
    returned field's period vectors.
    """
    system = analytic_system(mesh, w, hd, anchors)
    rhs = np.zeros(mesh.n_edges)
    rhs[mesh.halfedge_edge[e]] = residue * mesh.halfedge_sign[e]
    return system.solve(np.zeros(hd.g), rhs)


def second_kind_b_periods(phi, phi_star, hd: HomologyData, e: int) -> np.ndarray:
    """B-periods of the unit second-kind integral at ``e`` from first-kind data.

    ``B_l = Re phi*_l(t_e) - Re phi*_l(h_e) + i (Re phi_l(t_e) - Re phi_l(h_e))``
    with transported differences, where ``phi_l`` and ``phi*_l`` have
    A-periods ``e_l`` and ``i e_l``.
    """
    re = np.array([-edge_difference(p, hd, e) for p in phi_star])
    im = np.array([-edge_difference(p, hd, e) for p in phi])
    return re + 1j * im


# -- third kind --------------------------------------------------------------------------------

class ThirdKindSystem:
    """Square system for differentials with prescribed residues.

    Rows: residue equations at all vertices but ``skip_vertex``, at all faces
    but ``skip_face``, then vanishing real A-periods along the primal alpha
    loops and vanishing imaginary A-periods along the dual alpha loops.
    """

    def __init__(self, mesh: SurfaceMesh, w, hd: HomologyData, skip_vertex: int, skip_face: int):
        self.mesh, self.w, self.hd = mesh, np.asarray(w, dtype=float), hd
        V, F, E, g = mesh.n_vertices, mesh.n_faces, mesh.n_edges, hd.g
        self.skip_vertex, self.skip_face = skip_vertex, skip_face
        er = np.arange(E)
        vrow = np.full(V, -1)
        vrow[np.arange(V) != skip_vertex] = np.arange(V - 1)
        frow = np.full(F, -1)
        frow[np.arange(F) != skip_face] = V - 1 + np.arange(F - 1)
        self.vrow, self.frow = vrow, frow
        rows, cols, vals = [], [], []
        # vertex rows: sum over edges with head z of c * omega
        for ends, sgn in ((mesh.edge_head, 1.0), (mesh.edge_tail, -1.0)):
            r = vrow[ends]
            k = r >= 0
            rows.append(r[k]), cols.append(er[k]), vals.append(sgn * self.w[k])
        hs = np.arange(mesh.n_halfedges)
        r = frow[hs // 3]
        k = r >= 0
        rows.append(r[k]), cols.append(mesh.halfedge_edge[hs][k]), vals.append(mesh.halfedge_sign[hs][k].astype(float))
        base = V - 1 + F - 1
        for j in range(g):
            loop = np.asarray(hd.basis_cycles[j], dtype=np.int64)
            rows.append(np.full(loop.size, base + j)), cols.append(mesh.halfedge_edge[loop])
            vals.append(mesh.halfedge_sign[loop].astype(float))
            dual = np.asarray(hd.dual_basis_loops[j], dtype=np.int64)
            de = mesh.halfedge_edge[dual]
            rows.append(np.full(dual.size, base + g + j)), cols.append(de)
            vals.append(mesh.halfedge_sign[dual] * self.w[de])
        n = base + 2 * g
        if n != E:
            raise ValueError("Euler characteristic mismatch in the residue system")
        self.matrix = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        try:
            self.lu = splu(self.matrix)
        except RuntimeError as exc:
            raise SolverFailure(f"residue system is singular: {exc}") from None

    def solve(self, vertex_res=None, face_res=None) -> EdgeDifferential:
        """Differential with the given residues (vertex values are coefficients of i)."""
        m = self.mesh
        rhs = np.zeros(self.matrix.shape[0])
        for res, rowmap in ((vertex_res, self.vrow), (face_res, self.frow)):
            if res is None:
                continue
            for idx, val in res.items():
                if rowmap[idx] >= 0:
                    rhs[rowmap[idx]] += val
        x = self.lu.solve(rhs)
        r = np.linalg.norm(self.matrix @ x - rhs)
        if r > 1e-9 * max(1.0, np.linalg.norm(rhs)):
            raise SolverFailure(f"residue system residual {r:.3g}")
        return EdgeDifferential(m, x)


def _third_kind_system(mesh, w, hd, skip_vertex, skip_face) -> ThirdKindSystem:
    key = ("third_kind", skip_vertex, skip_face, hash(np.asarray(w, dtype=float).tobytes()), id(hd))
    return mesh._memo(key, lambda: ThirdKindSystem(mesh, w, hd, skip_vertex, skip_face))


def solve_third_kind(mesh, w, hd: HomologyData, pole_pair, kind: str = "vertex") -> EdgeDifferential:
    """Differential of the third kind with two simple poles and zero A-periods.

    kind="vertex"
        residues ``+i`` at ``z`` and ``-i`` at ``w``, none elsewhere.
    kind="face"
        residues ``-1`` at face ``z`` and ``+1`` at face ``w``, so that
        ``Im f(z) - Im f(w) = sum_e omega(e) res_e f`` for every meromorphic
        ``f``, mirroring the vertex case.
    """
    z, wz = (int(p) for p in pole_pair)
    if z == wz:
        raise CoincidentPoles(f"poles coincide at {z}")
    if kind == "vertex":
        system = _third_kind_system(mesh, w, hd, wz, 0)
        return system.solve(vertex_res={z: 1.0})
    if kind == "face":
        system = _third_kind_system(mesh, w, hd, 0, wz)
        return system.solve(face_res={z: -1.0})
    raise ValueError(f"unknown pole kind {kind!r}")


def residue_identity_sides(omega: EdgeDifferential, f: MeromorphicFunction, w, hd):
    """``sum_e omega(e) res_e f`` and ``-sum_x Im f(x) res_x omega - i sum_y Re f(y) res_y omega``."""
    lhs = float(np.sum(omega.values * edge_residue(f, w, hd)))
    vres, fres = residues(omega, w)
    rhs = float(-np.sum(f.im * fres) + np.sum(f.re * vres))
    return lhs, rhs


# -- divisors ----------------------------------------------------------------------------------------

KINDS = ("vertex", "edge", "face")


@dataclass(frozen=True, eq=False)
class Divisor:
    vertex: np.ndarray
    edge: np.ndarray
    face: np.ndarray

    @classmethod
    def zero(cls, mesh: SurfaceMesh) -> "Divisor":
        return cls(
            np.zeros(mesh.n_vertices, dtype=np.int64),
            np.zeros(mesh.n_edges, dtype=np.int64),
            np.zeros(mesh.n_faces, dtype=np.int64),
        )

    @classmethod
    def from_entries(cls, mesh: SurfaceMesh, entries) -> "Divisor":
        d = cls.zero(mesh)
        arrays = dict(zip(KINDS, (d.vertex, d.edge, d.face)))
        for kind, index, value in entries:
            if kind not in arrays:
                raise ValueError(f"unknown cell kind {kind!r}")
            if int(value) not in (-1, 0, 1):
                raise ValueError(f"divisor values must be in {{-1, 0, 1}}, got {value}")
            arrays[kind][int(index)] = int(value)
        return d

    def entries(self) -> list:
        out = []
        for kind, arr in zip(KINDS, (self.vertex, self.edge, self.face)):
            out += [(kind, int(i), int(arr[i])) for i in np.flatnonzero(arr)]
        return out

    def to_json(self) -> str:
        return json.dumps([list(e) for e in self.entries()])

    @classmethod
    def from_json(cls, mesh, text: str) -> "Divisor":
        return cls.from_entries(mesh, json.loads(text))

    @property
    def degree(self) -> int:
        return int(self.vertex.sum() + self.edge.sum() + self.face.sum())

    def is_admissible(self) -> bool:
        return bool(np.all(self.vertex <= 0) and np.all(self.edge >= 0) and np.all(self.face <= 0))

    def __ge__(self, other: "Divisor") -> bool:
        return bool(
            np.all(self.vertex >= other.vertex) and np.all(self.edge >= other.edge) and np.all(self.face >= other.face)
        )

    def __neg__(self):
        return Divisor(-self.vertex, -self.edge, -self.face)


def divisor_of_function(f: MeromorphicFunction, w, hd: HomologyData, rel_tol: float = 1e-9) -> Divisor:
    scale = max(float(np.max(np.abs(f.re))), float(np.max(np.abs(f.im))), 1e-300)
    res = edge_residue(f, w, hd)
    return Divisor(
        (np.abs(f.re) <= rel_tol * scale).astype(np.int64),
        -(np.abs(res) > rel_tol * max(scale, float(np.max(np.abs(res))))).astype(np.int64),
        (np.abs(f.im) <= rel_tol * scale).astype(np.int64),
    )


def divisor_of_differential(omega: EdgeDifferential, w, rel_tol: float = 1e-9) -> Divisor:
    vres, fres = residues(omega, w)
    scale = max(float(np.max(np.abs(omega.values))), 1e-300)
    rscale = max(scale * float(np.max(np.abs(w))), scale)
    return Divisor(
        -(np.abs(vres) > rel_tol * rscale).astype(np.int64),
        (np.abs(omega.values) <= rel_tol * scale).astype(np.int64),
        -(np.abs(fres) > rel_tol * scale).astype(np.int64),
    )


def divisor_of(obj, w, hd: HomologyData | None = None, rel_tol: float = 1e-9) -> Divisor:
    if isinstance(obj, EdgeDifferential):
        return divisor_of_differential(obj, w, rel_tol)
    return divisor_of_function(obj, w, hd, rel_tol)


# -- Riemann-Roch ---------------------------------------------------------------------------------------

def numerical_rank(M: np.ndarray, rel_cutoff: float = 1e-8, min_gap: float = 1e3) -> int:
    """Rank by singular values with a cutoff, refusing ambiguous gaps."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    r = int(np.sum(s > rel_cutoff * s[0]))
    if r < s.size and s[r] > 0 and s[r - 1] / s[r] < min_gap:
        raise RankAmbiguous(f"singular values {s[r - 1]:.3g} and {s[r]:.3g} straddle the cutoff")
    return r


@dataclass(frozen=True)
class RiemannRochResult:
    l_minus_D: int
    i_D: int
    deg_D: int
    genus: int
    rank: int
    n_rows: int
    identity_holds: bool

    def to_dict(self) -> dict:
        return {k: (bool(v) if isinstance(v, bool) else int(v)) for k, v in self.__dict__.items()}


def riemann_roch_matrix(mesh, w, hd: HomologyData, D: Divisor, pb: PeriodBundle | None = None) -> np.ndarray:
    """Rows: ``d phi^k_T``, ``d phi^k_T*`` and third-kind differentials for star
    trees on the vertex and face supports; columns: edges with ``D = +1``."""
    edges = np.flatnonzero(D.edge > 0)
    cols = mesh.edge_halfedge[edges]
    if pb is None:
        pb = period_matrices_from_energy(energy_matrix(mesh, w, hd))
    phi, phi_star = first_kind_basis(mesh, w, hd, pb)
    rows = [edge_difference(p, hd, cols) for p in phi]
    rows += [edge_difference(p, hd, cols) for p in phi_star]
    vs = np.flatnonzero(D.vertex < 0)
    for z in vs[1:]:
        rows.append(solve_third_kind(mesh, w, hd, (z, vs[0]), "vertex").values[edges])
    fs = np.flatnonzero(D.face < 0)
    for x in fs[1:]:
        rows.append(solve_third_kind(mesh, w, hd, (x, fs[0]), "face").values[edges])
    return np.array(rows).reshape(len(rows), edges.size)


def riemann_roch(mesh, w, hd: HomologyData, D: Divisor, pb: PeriodBundle | None = None) -> RiemannRochResult:
    """Dimensions ``l(-D)`` and ``i(D)`` from the rank of the pole matrix.

    ``l(-D) = |supp D_inf| - rank + [no vertex support] + [no face support]``:
    each part of the complex additive constant survives only when no zero of
    that type pins it.  ``i(D) = rows - rank``.
    """
    if not D.is_admissible():
        raise NotAdmissible("divisor must be <= 0 on vertices and faces, >= 0 on edges")
    M = riemann_roch_matrix(mesh, w, hd, D, pb)
    rank = numerical_rank(M)
    n_vs = int(np.sum(D.vertex < 0))
    n_fs = int(np.sum(D.face < 0))
    l = M.shape[1] - rank + int(n_vs == 0) + int(n_fs == 0)
    i = M.shape[0] - rank
    deg = D.degree
    return RiemannRochResult(l, i, deg, hd.g, rank, M.shape[0], l == deg - 2 * hd.g + 2 + i)


def _too_large(n_edges, limit):
    if n_edges > limit:
        raise TooLarge(f"{n_edges} edges exceed the dense limit {limit}")


def residue_operator(mesh: SurfaceMesh, w) -> tuple[np.ndarray, np.ndarray]:
    """Dense matrices mapping edge values to vertex and face residues."""
    V, F, E = mesh.n_vertices, mesh.n_faces, mesh.n_edges
    Rv = np.zeros((V, E))
    np.add.at(Rv, (mesh.edge_head, np.arange(E)), w)
    np.add.at(Rv, (mesh.edge_tail, np.arange(E)), -w)
    Rf = np.zeros((F, E))
    hs = np.arange(mesh.n_halfedges)
    np.add.at(Rf, (hs // 3, mesh.halfedge_edge[hs]), mesh.halfedge_sign[hs])
    return Rv, Rf


def direct_i_dimension(mesh, w, D: Divisor, limit: int = 2000) -> int:
    """``i(D)`` as a nullspace dimension.

    Edge functions with ``omega = 0`` on edges where ``D = +1`` and zero
    residues at every vertex and face where ``D = 0``.
    """
    _too_large(mesh.n_edges, limit)
    Rv, Rf = residue_operator(mesh, w)
    E = mesh.n_edges
    C = np.vstack([np.eye(E)[D.edge > 0], Rv[D.vertex == 0], Rf[D.face == 0]])
    return E - numerical_rank(C)


def direct_l_dimension(mesh, w, D: Divisor, limit: int = 2000) -> int:
    """``l(-D)`` as a nullspace dimension.

    Single-valued pairs ``(u, v)`` satisfying the Cauchy-Riemann equation on
    every edge where ``D = 0``, with ``u = 0`` on the vertex support and
    ``v = 0`` on the face support.
    """
    _too_large(mesh.n_edges, limit)
    V, F, E = mesh.n_vertices, mesh.n_faces, mesh.n_edges
    A = np.zeros((E, V + F))
    er = np.arange(E)
    np.add.at(A, (er, mesh.edge_head), w)
    np.add.at(A, (er, mesh.edge_tail), -w)
    np.add.at(A, (er, V + mesh.edge_left), -1.0)
    np.add.at(A, (er, V + mesh.edge_right), 1.0)
    I = np.eye(V + F)
    C = np.vstack([A[D.edge == 0], I[:V][D.vertex < 0], I[V:][D.face < 0]])
    return V + F - numerical_rank(C)
