"""Multi-valued discrete functions, Dirichlet energies and the harmonic solver.

A multi-valued function is stored as

* ``u_base`` on vertices and ``v_base`` on faces (any lift), and
* real period vectors ``p_re``, ``p_im`` of length ``2g``, ordered
  ``(A_1 .. A_g, B_1 .. B_g)``.

The increments along edges are then single-valued::

    Du(e) = u(head) - u(tail) + p_re . kappa(e)
    Dv(e) = v(left) - v(right) + p_im . kappa_star(e)

and the discrete Cauchy-Riemann equation reads ``Dv(e) = c(e) Du(e)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .mesh import SurfaceMesh
from .topology import HomologyData

log = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    pass


class NotHarmonic(ValueError):
    pass


class ZeroWeightEdge(ValueError):
    pass


class MissingImaginaryPart(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MultiValuedField:
    u_base: np.ndarray
    p_re: np.ndarray
    v_base: np.ndarray | None = None
    p_im: np.ndarray | None = None

    @property
    def has_imaginary(self) -> bool:
        return self.v_base is not None

    def __add__(self, other: "MultiValuedField") -> "MultiValuedField":
        v = p = None
        if self.has_imaginary and other.has_imaginary:
            v, p = self.v_base + other.v_base, self.p_im + other.p_im
        return MultiValuedField(self.u_base + other.u_base, self.p_re + other.p_re, v, p)

    def __mul__(self, s: float) -> "MultiValuedField":
        v = None if self.v_base is None else s * self.v_base
        p = None if self.p_im is None else s * self.p_im
        return MultiValuedField(s * self.u_base, s * self.p_re, v, p)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def real_part(self) -> "MultiValuedField":
        return MultiValuedField(self.u_base, self.p_re)

    def A(self) -> np.ndarray:
        """Complex A-periods (needs both parts)."""
        g = self.p_re.size // 2
        im = self.p_im[:g] if self.p_im is not None else 0.0
        return self.p_re[:g] + 1j * im

    def B(self) -> np.ndarray:
        g = self.p_re.size // 2
        im = self.p_im[g:] if self.p_im is not None else 0.0
        return self.p_re[g:] + 1j * im


def constant_field(mesh: SurfaceMesh, g: int, re: float = 0.0, im: float = 0.0) -> MultiValuedField:
    return MultiValuedField(
        np.full(mesh.n_vertices, float(re)),
        np.zeros(2 * g),
        np.full(mesh.n_faces, float(im)),
        np.zeros(2 * g),
    )


# -- transported differences ---------------------------------------------------------

def edge_difference(f: MultiValuedField, hd: HomologyData, e=None):
    """``Du(e)``; ``e=None`` gives all edges in representative orientation."""
    m = hd.mesh
    h = m.edge_halfedge if e is None else np.asarray(e)
    return f.u_base[m.head(h)] - f.u_base[m.tail(h)] + hd.kappa_of(h) @ f.p_re


def dual_difference(f: MultiValuedField, hd: HomologyData, e=None):
    """``Dv(e)``, the jump of ``v`` crossing ``e`` from its right face to its left."""
    if f.v_base is None:
        raise MissingImaginaryPart("field has no face part")
    m = hd.mesh
    h = m.edge_halfedge if e is None else np.asarray(e)
    return f.v_base[m.left(h)] - f.v_base[m.right(h)] + hd.kappa_star_of(h) @ f.p_im


def dirichlet_energy(f: MultiValuedField, hd: HomologyData, w: np.ndarray) -> float:
    du = edge_difference(f, hd)
    return float(np.sum(w * du * du))


def _check_weights_nonzero(w, what="dual energy"):
    scale = np.max(np.abs(w))
    bad = np.abs(w) <= 1e-12 * scale
    if np.any(bad):
        raise ZeroWeightEdge(f"{what} undefined: edge {int(np.flatnonzero(bad)[0])} has zero weight")


def dual_energy(f: MultiValuedField, hd: HomologyData, w: np.ndarray) -> float:
    _check_weights_nonzero(w)
    dv = dual_difference(f, hd)
    return float(np.sum(dv * dv / w))


def energy_pairing(f1: MultiValuedField, f2: MultiValuedField, hd: HomologyData, w) -> float:
    return float(np.sum(w * edge_difference(f1, hd) * edge_difference(f2, hd)))


def triangle_interpolation_energy(lengths, values) -> float:
    """Dirichlet energy of the linear interpolant on one flat triangle.

    ``lengths[i]`` is the side opposite corner ``i`` and ``values[i]`` the
    value at corner ``i``.  Equals ``1/2 sum_i cot(angle_i) (u_{i+1}-u_{i+2})^2``.
    """
    a, b, c = (float(x) for x in lengths)
    u = np.asarray(values, dtype=float)
    s = 0.5 * (a + b + c)
    area = np.sqrt(s * (s - a) * (s - b) * (s - c))
    L2 = np.array([a * a, b * b, c * c])
    cot = (L2.sum() - 2 * L2) / (4 * area)
    diffs = np.array([u[1] - u[2], u[2] - u[0], u[0] - u[1]])
    return float(0.5 * np.sum(cot * diffs**2))


def face_energies(f: MultiValuedField, hd: HomologyData) -> np.ndarray:
    """Per-face interpolation energies of the transported corner differences."""
    m = hd.mesh
    h = np.arange(m.n_halfedges)
    du = edge_difference(f, hd, h).reshape(-1, 3)
    return 0.5 * np.sum(m.corner_cot * du * du, axis=1)


def stokes_sides(mesh: SurfaceMesh, faces, u, v):
    """Both sides of the discrete Stokes formula on a set of faces.

    Returns ``(edges, boundary)`` where ``edges`` sums
    ``(v(l) - v(r)) (u(h) - u(t))`` over every edge of the patch (at least one
    adjacent face in the set) and ``boundary`` sums ``v(r) (u(t) - u(h))`` over
    boundary edges oriented with their left face in the set.  ``u`` and ``v``
    are single-valued.
    """
    inside = np.zeros(mesh.n_faces, dtype=bool)
    inside[np.asarray(faces, dtype=np.int64)] = True
    h = mesh.edge_halfedge
    l, r = mesh.left(h), mesh.right(h)
    du = u[mesh.head(h)] - u[mesh.tail(h)]
    touched = inside[l] | inside[r]
    edges = float(np.sum(((v[l] - v[r]) * du)[touched]))
    lb = inside[l] & ~inside[r]
    rb = ~inside[l] & inside[r]  # flipped orientation puts l on the outside
    boundary = float(np.sum((v[r] * -du)[lb]) + np.sum((v[l] * du)[rb]))
    return edges, boundary


# -- harmonic solver -------------------------------------------------------------------

def _incidence(mesh: SurfaceMesh) -> sp.csr_matrix:
    def build():
        E = mesh.n_edges
        rows = np.concatenate([np.arange(E), np.arange(E)])
        cols = np.concatenate([mesh.edge_head, mesh.edge_tail])
        vals = np.concatenate([np.ones(E), -np.ones(E)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(E, mesh.n_vertices))

    return mesh._memo("incidence", build)


class _PinnedLaplacian:
    """Cotan Laplacian with one vertex removed, factorized once."""

    def __init__(self, mesh: SurfaceMesh, w: np.ndarray, anchor: int):
        B = _incidence(mesh)
        L = (B.T @ sp.diags(w) @ B).tocsc()
        keep = np.ones(mesh.n_vertices, dtype=bool)
        keep[anchor] = False
        self.keep = keep
        self.L = L
        self.Lp = L[keep][:, keep].tocsc()
        self.B = B
        self.w = w
        self.lu = None
        if self.Lp.shape[0]:
            try:
                self.lu = splu(self.Lp)
            except RuntimeError as exc:  # exactly singular factorization
                log.warning("sparse LU failed (%s); falling back to CG", exc)

    def solve(self, rhs: np.ndarray, tol: float) -> np.ndarray:
        rhs = np.atleast_2d(rhs.T).T
        n = self.Lp.shape[0]
        out = np.zeros((n, rhs.shape[1]))
        if n == 0:
            return out
        if self.lu is not None:
            out = self.lu.solve(rhs)
        else:
            for k in range(rhs.shape[1]):
                x, info = cg(self.Lp, rhs[:, k], rtol=tol * 1e-2, maxiter=20 * n)
                if info != 0:
                    raise SolverFailure(f"conjugate gradients did not converge (info={info})")
                out[:, k] = x
        res = np.linalg.norm(self.Lp @ out - rhs, axis=0)
        scale = np.maximum(np.linalg.norm(rhs, axis=0), 1e-300)
        bad = (res > tol * scale) & (np.linalg.norm(rhs, axis=0) > 0)
        if np.any(bad):
            # one round of iterative refinement before giving up
            out = out + (self.lu.solve(rhs - self.Lp @ out) if self.lu is not None else 0)
            res = np.linalg.norm(self.Lp @ out - rhs, axis=0)
            if np.any((res > tol * scale) & (np.linalg.norm(rhs, axis=0) > 0)):
                raise SolverFailure(f"relative residual {float(np.max(res / scale)):.3g} above {tol}")
        return out


def _laplacian(mesh: SurfaceMesh, w: np.ndarray, anchor: int) -> _PinnedLaplacian:
    key = ("laplacian", anchor, hash(np.asarray(w, dtype=float).tobytes()))
    return mesh._memo(key, lambda: _PinnedLaplacian(mesh, np.asarray(w, dtype=float), anchor))


def solve_harmonic_many(mesh, w, hd, P, anchor_vertex: int = 0, tol: float = 1e-10):
    """Harmonic vertex functions for several period vectors (columns of ``P``)."""
    P = np.asarray(P, dtype=float).reshape(2 * hd.g, -1)
    lap = _laplacian(mesh, w, anchor_vertex)
    # per-edge period contributions in representative orientation
    Kp = hd.kappa @ P
    rhs = -(lap.B.T @ (lap.w[:, None] * Kp))
    U = np.zeros((mesh.n_vertices, P.shape[1]))
    U[lap.keep] = lap.solve(rhs[lap.keep], tol)
    # the anchor row of the full system holds automatically when all others do
    full_res = lap.L @ U - rhs
    scale = np.maximum(np.abs(lap.B.T) @ (np.abs(lap.w)[:, None] * np.abs(Kp)), 1e-300).max(axis=0)
    if np.any(np.abs(full_res).max(axis=0) > 1e-8 * scale):
        raise SolverFailure("harmonicity residual too large at the anchor vertex")
    return U


def solve_harmonic(mesh, w, hd, p_re, anchor_vertex: int = 0, tol: float = 1e-10) -> MultiValuedField:
    """The harmonic multi-valued function with real periods ``p_re``.

    Minimizes the Dirichlet energy among vertex functions with these periods,
    i.e. solves ``sum_{tail(e)=z} c(e) Du(e) = 0`` at every vertex, with
    ``u(anchor_vertex) = 0``.
    """
    p_re = np.asarray(p_re, dtype=float).reshape(-1)
    U = solve_harmonic_many(mesh, w, hd, p_re[:, None], anchor_vertex, tol)
    return MultiValuedField(U[:, 0], p_re.copy())


def vertex_divergence(f: MultiValuedField, hd: HomologyData, w) -> np.ndarray:
    """``sum_{tail(e)=z} c(e) Du(e)`` at every vertex ``z``."""
    m = hd.mesh
    flux = w * edge_difference(f, hd)
    return np.bincount(m.edge_tail, weights=flux, minlength=m.n_vertices) - np.bincount(
        m.edge_head, weights=flux, minlength=m.n_vertices
    )


def _face_tree(mesh: SurfaceMesh, root: int):
    """BFS over faces; returns (order, entering crossing half-edge per face)."""
    def build():
        parent = np.full(mesh.n_faces, -1, dtype=np.int64)
        seen = np.zeros(mesh.n_faces, dtype=bool)
        seen[root] = True
        order = [root]
        q = deque([root])
        while q:
            f = q.popleft()
            for h in range(3 * f, 3 * f + 3):
                t = int(mesh.twin[h])
                g = t // 3
                if not seen[g]:
                    seen[g] = True
                    parent[g] = t
                    order.append(g)
                    q.append(g)
        return np.array(order), parent

    return mesh._memo(("face_tree", root), build)


def conjugate_function(
    mesh, w, hd: HomologyData, f_real: MultiValuedField, anchor_face: int = 0, tol: float = 1e-8
) -> MultiValuedField:
    """Attach the conjugate face function ``v`` to a harmonic ``u``.

    The imaginary periods are read off along the dual basis loops; ``v`` is
    integrated over a dual spanning tree and every remaining edge is checked.
    """
    m = mesh
    flux_all = w[m.halfedge_edge] * edge_difference(f_real, hd, np.arange(m.n_halfedges))
    p_im = np.array([flux_all[list(loop)].sum() if len(loop) else 0.0 for loop in hd.dual_basis_loops])
    target = flux_all - hd.kappa_star_of(np.arange(m.n_halfedges)) @ p_im  # v(l) - v(r) per half-edge
    order, parent = _face_tree(m, anchor_face)
    v = np.zeros(m.n_faces)
    for f in order[1:]:
        t = parent[f]
        v[f] = v[m.right(t)] + target[t]
    h = m.edge_halfedge
    resid = v[m.left(h)] - v[m.right(h)] - target[h]
    scale = max(float(np.max(np.abs(flux_all))), 1e-300)
    worst = float(np.max(np.abs(resid))) if resid.size else 0.0
    if worst > tol * scale:
        raise NotHarmonic(f"c*Du is not closed around some vertex (defect {worst:.3g}, scale {scale:.3g})")
    return replace(f_real, v_base=v, p_im=p_im)
