"""Homology bases and period cocycles.

Multi-valued functions on the surface are stored as single-valued data plus a
period vector; the cocycles built here say how much of each period an edge
carries.  For a basis of cycles ``c_1 .. c_2g`` (``alpha_1 .. alpha_g`` then
``beta_1 .. beta_g``):

* ``kappa`` is a closed primal 1-cochain with ``kappa(c_j) = e_j``;
* ``kappa_star`` is a closed dual 1-cochain with ``kappa_star(c*_j) = e_j``,
  where ``c*_j`` is the dual loop obtained by pushing ``c_j`` off to its left.

Loops are lists of half-edge ids.  A primal loop walks along its half-edges.
A dual loop is a list of *crossings*: the entry ``h`` means "pass from the
face right of ``h`` into the face left of ``h``".
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .mesh import SurfaceMesh


class TopologyError(ValueError):
    pass


class GenusZero(TopologyError):
    pass


class NotClosed(TopologyError):
    pass


class NotSymplectic(TopologyError):
    pass


def standard_symplectic(g: int) -> np.ndarray:
    J = np.zeros((2 * g, 2 * g), dtype=np.int64)
    J[:g, g:] = np.eye(g, dtype=np.int64)
    J[g:, :g] = -np.eye(g, dtype=np.int64)
    return J


@dataclass(frozen=True, eq=False)
class HomologyData:
    """Symplectic homology basis with its primal and dual period cocycles.

    ``kappa`` and ``kappa_star`` have shape ``(E, 2g)`` and are stored for the
    representative orientation of each edge; use :meth:`kappa_of` /
    :meth:`kappa_star_of` for arbitrary half-edges.
    """

    mesh: SurfaceMesh
    basis_cycles: tuple
    dual_basis_loops: tuple
    intersection: np.ndarray
    kappa: np.ndarray
    kappa_star: np.ndarray

    @property
    def g(self) -> int:
        return self.kappa.shape[1] // 2

    def kappa_of(self, h):
        h = np.asarray(h)
        m = self.mesh
        return m.halfedge_sign[h][..., None] * self.kappa[m.halfedge_edge[h]]

    def kappa_star_of(self, h):
        h = np.asarray(h)
        m = self.mesh
        return m.halfedge_sign[h][..., None] * self.kappa_star[m.halfedge_edge[h]]


# -- chains ----------------------------------------------------------------------

def edge_chain(mesh: SurfaceMesh, loop) -> np.ndarray:
    """Signed multiplicity of every edge in a list of half-edges."""
    loop = np.asarray(loop, dtype=np.int64)
    return np.bincount(
        mesh.halfedge_edge[loop], weights=mesh.halfedge_sign[loop], minlength=mesh.n_edges
    )


def _check_primal_closed(mesh: SurfaceMesh, loop) -> None:
    c = edge_chain(mesh, loop)
    bd = np.bincount(mesh.edge_head, weights=c, minlength=mesh.n_vertices) - np.bincount(
        mesh.edge_tail, weights=c, minlength=mesh.n_vertices
    )
    if np.any(np.abs(bd) > 1e-12):
        raise NotClosed("primal chain has nonzero boundary")


def _check_dual_closed(mesh: SurfaceMesh, loop) -> None:
    c = edge_chain(mesh, loop)
    bd = np.bincount(mesh.edge_left, weights=c, minlength=mesh.n_faces) - np.bincount(
        mesh.edge_right, weights=c, minlength=mesh.n_faces
    )
    if np.any(np.abs(bd) > 1e-12):
        raise NotClosed("dual chain has nonzero boundary")


def loop_class(hd: HomologyData, loop, dual: bool = False) -> np.ndarray:
    """Integer homology class of a closed primal or dual loop."""
    if len(loop) == 0:
        return np.zeros(2 * hd.g, dtype=np.int64)
    if dual:
        _check_dual_closed(hd.mesh, loop)
        raw = hd.kappa_star_of(np.asarray(loop)).sum(axis=0)
    else:
        _check_primal_closed(hd.mesh, loop)
        raw = hd.kappa_of(np.asarray(loop)).sum(axis=0)
    return np.rint(raw).astype(np.int64)


def reverse_loop(mesh: SurfaceMesh, loop) -> list:
    return [int(mesh.twin[h]) for h in reversed(loop)]


def pushoff(mesh: SurfaceMesh, walk) -> list:
    """Push a closed primal walk off to its left, giving a dual loop.

    At each vertex the dual loop turns clockwise from the incoming edge to the
    outgoing one, crossing the edges that lie on the left of the walk.
    """
    walk = [int(h) for h in walk]
    m = len(walk)
    out = []
    for i in range(m):
        h_in, h_out = walk[i], walk[(i + 1) % m]
        if int(mesh.head(h_in)) != int(mesh.tail(h_out)):
            raise NotClosed(f"walk is broken between positions {i} and {(i + 1) % m}")
        e = int(mesh.next_cw(mesh.twin[h_in]))
        while e != h_out:
            out.append(int(mesh.twin[e]))
            e = int(mesh.next_cw(e))
    return out


# -- spanning trees -----------------------------------------------------------------

def _primal_tree(mesh: SurfaceMesh, root: int):
    """BFS spanning tree on vertices: order, parent half-edge (pointing to the vertex)."""
    nv = mesh.n_vertices
    nh = mesh.n_halfedges
    tails = mesh.tail(np.arange(nh))
    order_h = np.argsort(tails, kind="stable")
    starts = np.searchsorted(tails[order_h], np.arange(nv + 1))
    parent = np.full(nv, -1, dtype=np.int64)
    seen = np.zeros(nv, dtype=bool)
    seen[root] = True
    order = [root]
    q = deque([root])
    heads = mesh.head(np.arange(nh))
    while q:
        z = q.popleft()
        for h in order_h[starts[z] : starts[z + 1]]:
            y = heads[h]
            if not seen[y]:
                seen[y] = True
                parent[y] = h
                order.append(y)
                q.append(y)
    in_tree = np.zeros(mesh.n_edges, dtype=bool)
    ph = parent[parent >= 0]
    in_tree[mesh.halfedge_edge[ph]] = True
    return np.array(order), parent, in_tree


def _dual_tree(mesh: SurfaceMesh, root: int, primal_in_tree: np.ndarray):
    """BFS spanning tree on faces avoiding primal tree edges.

    ``parent[f]`` is the crossing half-edge entering ``f`` (left face ``f``).
    """
    nf = mesh.n_faces
    parent = np.full(nf, -1, dtype=np.int64)
    seen = np.zeros(nf, dtype=bool)
    seen[root] = True
    order = [root]
    q = deque([root])
    twin = mesh.twin
    he = mesh.halfedge_edge
    while q:
        f = q.popleft()
        for h in range(3 * f, 3 * f + 3):
            if primal_in_tree[he[h]]:
                continue
            # crossing from f (= right of twin[h]) into the face left of twin[h]
            t = int(twin[h])
            g = t // 3
            if not seen[g]:
                seen[g] = True
                parent[g] = t
                order.append(g)
                q.append(g)
    in_tree = np.zeros(mesh.n_edges, dtype=bool)
    ph = parent[parent >= 0]
    in_tree[he[ph]] = True
    return np.array(order), parent, in_tree


def _tree_path_to_root(mesh, parent_he, v):
    """Half-edges walking from vertex ``v`` up to the root."""
    path = []
    while parent_he[v] >= 0:
        h = int(parent_he[v])
        path.append(int(mesh.twin[h]))
        v = int(mesh.tail(h))
    return path


# -- tree-cotree cocycles -------------------------------------------------------------

@dataclass
class _TreeCotree:
    v_order: np.ndarray
    v_parent: np.ndarray
    f_order: np.ndarray
    f_parent: np.ndarray
    leftover: np.ndarray  # representative half-edges of the 2g generator edges
    cycles: list  # closed walks through the root vertex
    sigma: np.ndarray  # (E, 2g) primal cocycles dual to cycles
    tau: np.ndarray  # (E, 2g) dual cocycles dual to the tree-cotree dual cycles


def _tree_cotree(mesh: SurfaceMesh, root_vertex: int = 0, root_face: int = 0) -> _TreeCotree:
    v_order, v_parent, t_in = _primal_tree(mesh, root_vertex)
    f_order, f_parent, c_in = _dual_tree(mesh, root_face, t_in)
    left_mask = ~(t_in | c_in)
    leftover = mesh.edge_halfedge[left_mask]
    n = leftover.size
    if n != 2 * mesh.genus:
        raise TopologyError(f"tree-cotree left {n} edges, expected {2 * mesh.genus}")

    E = mesh.n_edges
    he = mesh.halfedge_edge
    sg = mesh.halfedge_sign

    cycles = []
    for x in leftover:
        t, h = int(mesh.tail(x)), int(mesh.head(x))
        to_t = reverse_loop(mesh, _tree_path_to_root(mesh, v_parent, t))
        from_h = _tree_path_to_root(mesh, v_parent, h)
        cycles.append(to_t + [int(x)] + from_h)

    # primal cocycles: zero on tree edges, identity on leftover, faces closed
    sigma = np.zeros((E, n))
    sigma[he[leftover], np.arange(n)] = 1.0
    for f in f_order[::-1][:-1]:
        p = int(f_parent[f])  # crossing into f: half-edge with left face f
        hs = 3 * f + np.arange(3)
        others = hs[hs != p]
        s = (sg[others][:, None] * sigma[he[others]]).sum(axis=0)
        sigma[he[p]] = -sg[p] * s

    # dual cocycles: zero on cotree edges, identity on leftover, vertices closed
    tau = np.zeros((E, n))
    tau[he[leftover], np.arange(n)] = 1.0
    nh = mesh.n_halfedges
    tails = mesh.tail(np.arange(nh))
    order_h = np.argsort(tails, kind="stable")
    starts = np.searchsorted(tails[order_h], np.arange(mesh.n_vertices + 1))
    for z in v_order[::-1][:-1]:
        p = int(v_parent[z])  # half-edge ending at z; its twin leaves z
        q = int(mesh.twin[p])
        out = order_h[starts[z] : starts[z + 1]]
        others = out[he[out] != he[q]]
        # loop edges at z contribute through both half-edges and cancel
        s = (sg[others][:, None] * tau[he[others]]).sum(axis=0)
        tau[he[q]] = -sg[q] * s
    return _TreeCotree(v_order, v_parent, f_order, f_parent, leftover, cycles, sigma, tau)


def _unimodular_inverse(Q: np.ndarray, what: str) -> np.ndarray:
    det = np.linalg.det(Q)
    if abs(abs(det) - 1) > 1e-6:
        raise NotSymplectic(f"{what} is not a homology basis (det {det:.6g})")
    return np.linalg.inv(Q)


def _symplectic_reduce(Omega: np.ndarray) -> np.ndarray:
    """Integer unimodular ``S`` with ``S.T @ Omega @ S == J``.

    Greedy symplectic Gram-Schmidt over the integers; Euclid steps bring the
    pairing of the pivot with the rest down to +-1.
    """
    n = Omega.shape[0]
    g = n // 2
    W = Omega.astype(object)
    vecs = [np.array([int(i == j) for i in range(n)], dtype=object) for j in range(n)]
    form = lambda x, y: int(x @ W @ y)  # noqa: E731
    a_list, b_list = [], []
    while vecs:
        a = vecs.pop(0)
        while True:
            vals = [form(a, v) for v in vecs]
            nz = [i for i, w in enumerate(vals) if w != 0]
            if not nz:
                raise NotSymplectic("intersection form is degenerate")
            k = min(nz, key=lambda i: abs(vals[i]))
            done = True
            for i in nz:
                if i != k:
                    q = vals[i] // vals[k]
                    vecs[i] = vecs[i] - q * vecs[k]
                    if form(a, vecs[i]) != 0:
                        done = False
            if done:
                break
        b = vecs.pop(k)
        w = form(a, b)
        if abs(w) != 1:
            raise NotSymplectic("intersection form is not unimodular")
        if w < 0:
            b = -b
        vecs = [v - form(v, b) * a + form(v, a) * b for v in vecs]
        a_list.append(a)
        b_list.append(b)
    S = np.array([list(v) for v in a_list + b_list], dtype=np.int64).T
    assert S.shape == (n, n) and len(a_list) == g
    return S


def _walk_from_combination(mesh, cycles, coeffs) -> list:
    walk = []
    for c, k in zip(cycles, coeffs):
        k = int(k)
        piece = c if k > 0 else reverse_loop(mesh, c)
        walk.extend(piece * abs(k))
    return walk


def homology_basis(
    mesh: SurfaceMesh,
    cycles=None,
    *,
    root_vertex: int = 0,
    root_face: int = 0,
) -> HomologyData:
    """Symplectic homology basis plus period cocycles.

    Parameters
    ----------
    cycles : list of closed walks, optional
        Explicit ``alpha_1 .. alpha_g, beta_1 .. beta_g``.  They must form a
        standard symplectic basis; otherwise :class:`NotSymplectic` is raised.
        Without them a basis is computed from a tree-cotree decomposition.
    root_vertex, root_face
        Roots of the internal spanning trees.  Changing them changes the
        cocycles only by exact cochains.
    """
    g = mesh.genus
    if g == 0:
        raise GenusZero("a sphere has no homology basis")
    tc = _tree_cotree(mesh, root_vertex, root_face)
    n = 2 * g

    def dual_from(walks, sigma_basis):
        # sigma_basis(E, n) dual to tc.cycles; re-dualize to the given walks
        Q = np.array([edge_chain(mesh, w) @ sigma_basis for w in walks]).T  # Q[x, j]
        Qr = np.rint(Q)
        if np.max(np.abs(Q - Qr)) > 1e-8:
            raise NotSymplectic("cycle classes are not integral")
        return Qr

    if cycles is None:
        walks0 = tc.cycles
    else:
        walks0 = [[int(h) for h in c] for c in cycles]
        if len(walks0) != n:
            raise NotSymplectic(f"expected {n} cycles, got {len(walks0)}")
        for w in walks0:
            _check_primal_closed(mesh, w)

    Q = dual_from(walks0, tc.sigma)
    sigma = tc.sigma @ _unimodular_inverse(Q, "cycle list").T
    duals0 = [pushoff(mesh, w) for w in walks0]
    P = np.array([edge_chain(mesh, d) @ tc.tau for d in duals0]).T
    P = np.rint(P)
    tau = tc.tau @ _unimodular_inverse(P, "pushed-off loops").T

    M = sigma.T @ tau  # bilinear pairing of period vectors
    Omega = np.rint(-np.linalg.inv(M)).astype(np.int64)  # intersection form of walks0

    if cycles is None:
        S = _symplectic_reduce(Omega)
        walks = [_walk_from_combination(mesh, walks0, S[:, k]) for k in range(n)]
        Sinv = np.linalg.inv(S.astype(float))
        sigma = sigma @ Sinv.T
        tau = tau @ Sinv.T
        duals = [pushoff(mesh, w) for w in walks]
        Omega = (S.T @ Omega @ S).astype(np.int64)
    else:
        walks, duals = walks0, duals0
        if not np.array_equal(Omega, standard_symplectic(g)):
            raise NotSymplectic(f"explicit cycles have intersection matrix\n{Omega}")

    kappa = sigma.copy()
    kappa_star = tau.copy()
    kappa.setflags(write=False)
    kappa_star.setflags(write=False)
    return HomologyData(
        mesh=mesh,
        basis_cycles=tuple(tuple(w) for w in walks),
        dual_basis_loops=tuple(tuple(d) for d in duals),
        intersection=Omega,
        kappa=kappa,
        kappa_star=kappa_star,
    )


def period_pairing(hd: HomologyData) -> np.ndarray:
    """``sum_e kappa(e) kappa_star(e)^T``; equals ``J`` for a standard basis."""
    return hd.kappa.T @ hd.kappa_star
