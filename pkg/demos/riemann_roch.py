"""Riemann-Roch on a torus: which pairs of poles admit a meromorphic function?

A single simple pole leaves only the constants (``l(-D) = 2``).  Two poles give
a new function exactly when the two edges are parallel.
"""

import itertools

from discrete_riemann import gen
from discrete_riemann.abelian import Divisor, riemann_roch
from discrete_riemann.mesh import cotan_weights
from discrete_riemann.periods import period_bundle
from discrete_riemann.topology import homology_basis


def main():
    eta, n = 0.3 + 0.9j, 2
    mesh, cycles = gen.flat_torus(eta, n)
    hd, w = homology_basis(mesh, cycles), cotan_weights(mesh)
    pb = period_bundle(mesh, hd, w)
    vec = gen.flat_torus_edge_vectors(eta, n)

    D = Divisor.zero(mesh)
    D.edge[0] = 1
    r = riemann_roch(mesh, w, hd, D, pb)
    print(f"one pole at edge 0: l(-D) = {r.l_minus_D}, i(D) = {r.i_D}, deg D = {r.deg_D}")

    tally = {}
    for e1, e2 in itertools.combinations(range(mesh.n_edges), 2):
        D = Divisor.zero(mesh)
        D.edge[[e1, e2]] = 1
        l = riemann_roch(mesh, w, hd, D, pb).l_minus_D
        parallel = abs((vec[e2] / vec[e1]).imag) < 1e-12
        tally[parallel, l] = tally.get((parallel, l), 0) + 1
    print("\ntwo poles (pair count by parallelism and l(-D)):")
    for (parallel, l), count in sorted(tally.items()):
        print(f"  {'parallel' if parallel else 'transversal':12s} l(-D) = {l}: {count} pairs")

if __name__ == "__main__":
    main()
