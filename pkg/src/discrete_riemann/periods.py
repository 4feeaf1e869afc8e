"""Discrete Abelian integrals of the first kind and period matrices.

The main route follows the energy matrix: harmonic functions ``u_1 .. u_2g``
with real periods ``e_1 .. e_2g`` give the Gram matrix ``E`` of Dirichlet
energies, and block algebra on ``E`` yields the period matrix ``Pi_T``, the
dual period matrix ``Pi_T*`` and ``Pi_Q = (Pi_T + Pi_T*) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .harmonic import (
    MultiValuedField,
    SolverFailure,
    conjugate_function,
    edge_difference,
    dual_difference,
    solve_harmonic,
    solve_harmonic_many,
)
from .mesh import SurfaceMesh, cotan_weights
from .topology import HomologyData, homology_basis


class SingularBlock(np.linalg.LinAlgError):
    pass


class ConsistencyFailure(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PeriodBundle:
    g: int
    energy: np.ndarray
    Pi_T: np.ndarray
    Pi_T_star: np.ndarray
    Pi_Q: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        cplx = lambda a: [[[float(z.real), float(z.imag)] for z in row] for row in a]  # noqa: E731
        return {
            "g": self.g,
            "energy_matrix": self.energy.tolist(),
            "Pi_T": cplx(self.Pi_T),
            "Pi_T_star": cplx(self.Pi_T_star),
            "Pi_Q": cplx(self.Pi_Q),
            "diagnostics": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in self.diagnostics.items()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def complex_matrix_from_json(data) -> np.ndarray:
    """Inverse of the ``[re, im]`` pair encoding used in :meth:`PeriodBundle.to_dict`."""
    a = np.asarray(data, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


# -- energy matrix --------------------------------------------------------------------

def harmonic_basis(mesh, w, hd, anchor_vertex: int = 0, tol: float = 1e-10) -> np.ndarray:
    """Vertex values of the harmonic functions with periods ``e_1 .. e_2g`` (columns)."""
    return solve_harmonic_many(mesh, w, hd, np.eye(2 * hd.g), anchor_vertex, tol)


def energy_matrix(mesh: SurfaceMesh, w, hd: HomologyData, tol: float = 1e-10) -> np.ndarray:
    """Gram matrix ``E_ij = sum_e c(e) Du_i(e) Du_j(e)`` of the harmonic basis."""
    U = harmonic_basis(mesh, w, hd, tol=tol)
    h = mesh.edge_halfedge
    D = U[mesh.head(h)] - U[mesh.tail(h)] + hd.kappa
    E = D.T @ (w[:, None] * D)
    return 0.5 * (E + E.T)


def period_matrices_from_energy(E, tol: float = 1e-8) -> PeriodBundle:
    """Recover ``Pi_T``, ``Pi_T*`` and ``Pi_Q`` from the energy matrix.

    With the symmetric Gram matrix ``E = [[E11, E12], [E21, E22]]``::

        Im Pi_T* = E22^-1          Re Pi_T  = -E22^-1 E21
        Re Pi_T* = -E12 E22^-1     Im Pi_T  = E11 - E12 E22^-1 E21

    The off-diagonal blocks matter only when ``Re Pi_T`` is not symmetric.
    """
    E = np.asarray(E, dtype=float)
    n = E.shape[0]
    if E.shape != (n, n) or n % 2:
        raise ValueError("energy matrix must be square of even size")
    g = n // 2
    E11, E12, E21, E22 = E[:g, :g], E[:g, g:], E[g:, :g], E[g:, g:]
    cond = np.linalg.cond(E22)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularBlock(f"E22 is singular (condition number {cond:.3g})")
    E22inv = np.linalg.inv(E22)
    im_star = E22inv
    re_T = -E22inv @ E21
    re_star = -E12 @ E22inv
    im_T = E11 - E12 @ E22inv @ E21
    Pi_T = re_T + 1j * im_T
    Pi_star = re_star + 1j * im_star
    Pi_Q = 0.5 * (Pi_T + Pi_star)
    pb = PeriodBundle(g, E, Pi_T, Pi_star, Pi_Q)
    pb.diagnostics.update(validate_period_bundle(pb, tol))
    return pb


def validate_period_bundle(pb: PeriodBundle, tol: float = 1e-8) -> dict:
    """Check symmetry and positivity of the period matrices.

    Returns measured defects together with ``*_ok`` flags; ``all_ok`` combines
    them.
    """
    scale = max(1.0, float(np.max(np.abs(pb.Pi_T))), float(np.max(np.abs(pb.Pi_T_star))))
    im_T, im_S = pb.Pi_T.imag, pb.Pi_T_star.imag
    d = {
        "im_T_asymmetry": float(np.linalg.norm(im_T - im_T.T)),
        "im_T_star_asymmetry": float(np.linalg.norm(im_S - im_S.T)),
        "re_transpose_defect": float(np.linalg.norm(pb.Pi_T_star.real - pb.Pi_T.real.T)),
        "Pi_Q_asymmetry": float(np.linalg.norm(pb.Pi_Q - pb.Pi_Q.T)),
        "im_T_min_eig": float(np.linalg.eigvalsh(0.5 * (im_T + im_T.T)).min()),
        "im_T_star_min_eig": float(np.linalg.eigvalsh(0.5 * (im_S + im_S.T)).min()),
        "im_Q_min_eig": float(np.linalg.eigvalsh(0.5 * (pb.Pi_Q.imag + pb.Pi_Q.imag.T)).min()),
    }
    if pb.energy is not None and pb.energy.size:
        E = pb.energy
        d["energy_asymmetry"] = float(np.linalg.norm(E - E.T))
        d["energy_min_eig"] = float(np.linalg.eigvalsh(0.5 * (E + E.T)).min())
    ok = {
        "im_T_symmetric_ok": d["im_T_asymmetry"] <= tol * scale,
        "im_T_star_symmetric_ok": d["im_T_star_asymmetry"] <= tol * scale,
        "re_transpose_ok": d["re_transpose_defect"] <= tol * scale,
        "Pi_Q_symmetric_ok": d["Pi_Q_asymmetry"] <= tol * scale,
        "im_T_positive_ok": d["im_T_min_eig"] > 0,
        "im_T_star_positive_ok": d["im_T_star_min_eig"] > 0,
        "im_Q_positive_ok": d["im_Q_min_eig"] > 0,
    }
    if "energy_min_eig" in d:
        ok["energy_positive_ok"] = d["energy_min_eig"] > 0
    d.update(ok)
    d["all_ok"] = all(ok.values())
    return d


def period_bundle(mesh: SurfaceMesh, hd: HomologyData | None = None, w=None, tol: float = 1e-10) -> PeriodBundle:
    if w is None:
        w = cotan_weights(mesh)
    if hd is None:
        hd = homology_basis(mesh)
    return period_matrices_from_energy(energy_matrix(mesh, w, hd, tol))


# -- first-kind integrals ---------------------------------------------------------------

def first_kind_b_periods(pb: PeriodBundle, A) -> np.ndarray:
    """B-periods of the first-kind integral with A-periods ``A``.

    ``Re B = Re Pi_T Re A - Im Pi_T* Im A`` and
    ``Im B = Im Pi_T Re A + Re Pi_T* Im A``.
    """
    A = np.asarray(A, dtype=complex)
    re = pb.Pi_T.real @ A.real - pb.Pi_T_star.imag @ A.imag
    im = pb.Pi_T.imag @ A.real + pb.Pi_T_star.real @ A.imag
    return re + 1j * im


def solve_first_kind(
    mesh: SurfaceMesh,
    w,
    hd: HomologyData,
    A,
    anchors=(0, 0),
    pb: PeriodBundle | None = None,
    cross_check: bool | None = None,
    tol: float = 1e-8,
) -> MultiValuedField:
    """Discrete Abelian integral of the first kind with A-periods ``A``.

    The real B-periods come from the period bundle; ``Re f`` is then the
    harmonic function with those real periods and ``Im f`` its conjugate.
    The imaginary A-periods of the result are compared with ``Im A``.

    ``cross_check`` additionally solves the square Cauchy-Riemann system
    directly (default: on meshes with at most 1000 vertices) and raises
    :class:`ConsistencyFailure` if the two routes disagree.
    """
    g = hd.g
    A = np.asarray(A, dtype=complex).reshape(g)
    if pb is None:
        pb = period_matrices_from_energy(energy_matrix(mesh, w, hd))
    B = first_kind_b_periods(pb, A)
    p_re = np.concatenate([A.real, B.real])
    f = solve_harmonic(mesh, w, hd, p_re, anchors[0])
    f = conjugate_function(mesh, w, hd, f, anchors[1])
    scale = max(1.0, float(np.max(np.abs(np.concatenate([A, B])))))
    if np.max(np.abs(f.p_im[:g] - A.imag)) > tol * scale:
        raise ConsistencyFailure(f"imaginary A-periods {f.p_im[:g]} differ from {A.imag}")
    if np.max(np.abs(f.p_im[g:] - B.imag)) > tol * scale:
        raise ConsistencyFailure(f"imaginary B-periods {f.p_im[g:]} differ from {B.imag}")
    if cross_check is None:
        cross_check = mesh.n_vertices <= 1000
    if cross_check:
        f2 = analytic_system(mesh, w, hd, anchors).solve_first_kind(A)
        if np.max(np.abs(f2.B() - f.B())) > tol * scale:
            raise ConsistencyFailure(f"B-periods disagree: {f.B()} vs {f2.B()}")
    return f


class AnalyticSystem:
    """The square linear system of the discrete Cauchy-Riemann equations.

    Unknowns are ``u`` on vertices, ``v`` on faces and the ``2g`` real
    B-period parts; there is one equation per edge,
    ``c(e) Du(e) - Dv(e) = r(e)``, plus the normalizations ``u(z0) = 0`` and
    ``v(w0) = 0``.  The A-periods enter the right-hand side.  One LU
    factorization serves every right-hand side.
    """

    def __init__(self, mesh: SurfaceMesh, w, hd: HomologyData, anchors=(0, 0)):
        self.mesh, self.w, self.hd = mesh, np.asarray(w, dtype=float), hd
        g, V, F, E = hd.g, mesh.n_vertices, mesh.n_faces, mesh.n_edges
        self.g = g
        h = mesh.edge_halfedge
        rows, cols, vals = [], [], []

        def add(r, c, v):
            r, c, v = np.broadcast_arrays(np.asarray(r), np.asarray(c), np.asarray(v, dtype=float))
            rows.append(r), cols.append(c), vals.append(v)

        er = np.arange(E)
        c = self.w
        add(er, mesh.head(h), c)
        add(er, mesh.tail(h), -c)
        add(er, V + mesh.left(h), -np.ones(E))
        add(er, V + mesh.right(h), np.ones(E))
        # B-period unknowns: Re B_k through kappa, Im B_k through kappa_star
        for k in range(g):
            add(er, V + F + k, c * hd.kappa[:, g + k])
            add(er, V + F + g + k, -hd.kappa_star[:, g + k])
        add([E], [anchors[0]], [1.0])
        add([E + 1], [V + anchors[1]], [1.0])
        n = V + F + 2 * g
        if E + 2 != n:
            raise ValueError("Euler characteristic mismatch in the square system")
        self.matrix = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        try:
            self.lu = splu(self.matrix)
        except RuntimeError as exc:
            raise SolverFailure(f"Cauchy-Riemann system is singular: {exc}") from None

    def _unpack(self, x, A) -> MultiValuedField:
        g, V, F = self.g, self.mesh.n_vertices, self.mesh.n_faces
        A = np.asarray(A, dtype=complex).reshape(g)
        p_re = np.concatenate([A.real, x[V + F : V + F + g]])
        p_im = np.concatenate([A.imag, x[V + F + g :]])
        return MultiValuedField(x[:V].copy(), p_re, x[V : V + F].copy(), p_im)

    def solve(self, A, edge_rhs=None) -> MultiValuedField:
        """Field with A-periods ``A`` and ``c Du - Dv = edge_rhs`` edge-wise."""
        g, E = self.g, self.mesh.n_edges
        A = np.asarray(A, dtype=complex).reshape(g)
        rhs = np.zeros(E + 2)
        if edge_rhs is not None:
            rhs[:E] = edge_rhs
        rhs[:E] -= self.w * (self.hd.kappa[:, :g] @ A.real)
        rhs[:E] += self.hd.kappa_star[:, :g] @ A.imag
        x = self.lu.solve(rhs)
        res = np.linalg.norm(self.matrix @ x - rhs)
        if res > 1e-9 * max(1.0, np.linalg.norm(rhs)):
            raise SolverFailure(f"square system residual {res:.3g}")
        return self._unpack(x, A)

    def solve_first_kind(self, A) -> MultiValuedField:
        return self.solve(A)


def analytic_system(mesh, w, hd, anchors=(0, 0)) -> AnalyticSystem:
    key = ("analytic_system", tuple(anchors), hash(np.asarray(w, dtype=float).tobytes()), id(hd))
    return mesh._memo(key, lambda: AnalyticSystem(mesh, w, hd, anchors))


def first_kind_basis(mesh, w, hd, pb: PeriodBundle | None = None, anchors=(0, 0)):
    """``phi^l_T`` (A-periods ``e_l``) and ``phi^l_T*`` (A-periods ``i e_l``)."""
    if pb is None:
        pb = period_matrices_from_energy(energy_matrix(mesh, w, hd))
    I = np.eye(hd.g)
    phi = [solve_first_kind(mesh, w, hd, I[l], anchors, pb, cross_check=False) for l in range(hd.g)]
    phi_star = [solve_first_kind(mesh, w, hd, 1j * I[l], anchors, pb, cross_check=False) for l in range(hd.g)]
    return phi, phi_star


# -- identities -----------------------------------------------------------------------------

def bilinear_sides(f: MultiValuedField, f2: MultiValuedField, hd: HomologyData):
    """Both sides of the Riemann bilinear identity for ``u = Re f``, ``u' = Im f2``.

    ``sum_e Dv'(e) Du(e)`` and ``sum_k (A_k B'_k - B_k A'_k)`` with real
    periods ``A, B`` of ``u`` and ``A', B'`` of ``u'``.
    """
    g = hd.g
    lhs = float(np.sum(dual_difference(f2, hd) * edge_difference(f, hd)))
    A, B = f.p_re[:g], f.p_re[g:]
    A2, B2 = f2.p_im[:g], f2.p_im[g:]
    rhs = float(np.sum(A * B2 - B * A2))
    return lhs, rhs


def riemann_bilinear_residual(f, f2, hd, w=None) -> float:
    lhs, rhs = bilinear_sides(f, f2, hd)
    return abs(lhs - rhs)


def energy_conservation_sides(f: MultiValuedField, hd: HomologyData, w):
    """``E_T(Re f)`` and ``-Im sum_k A_k conj(B_k)`` for a first-kind integral."""
    du = edge_difference(f, hd)
    return float(np.sum(w * du * du)), float(-np.imag(np.sum(f.A() * np.conj(f.B()))))


def period_symmetry_defect(f: MultiValuedField, f2: MultiValuedField) -> float:
    """``Im sum_k (A_k B'_k - B_k A'_k)`` for two first-kind integrals (vanishes)."""
    return float(np.imag(np.sum(f.A() * f2.B() - f.B() * f2.A())))


def frobenius_error(Pi, Pi_ref) -> float:
    return float(np.linalg.norm(np.asarray(Pi) - np.asarray(Pi_ref)))
