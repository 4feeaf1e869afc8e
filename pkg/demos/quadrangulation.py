"""Delaunay-Voronoi quadrangulation of an equilateral genus-2 surface.

Every edge becomes a kite spanned by its endpoints and the two neighbouring
circumcenters.  The first-kind integrals become analytic on the resulting
quad surface, and their periods average the primal and dual period matrices.
"""

import numpy as np

from discrete_riemann import gen
from discrete_riemann.mesh import cotan_weights
from discrete_riemann.periods import first_kind_basis, period_bundle
from discrete_riemann.quad import build_quad_surface, quad_analyticity_residuals, quad_period_matrix, to_quad_function
from discrete_riemann.topology import homology_basis


def main():
    mesh, cycles = gen.genus2_squares(8, equilateral=True)
    hd, w = homology_basis(mesh, cycles), cotan_weights(mesh)
    Q = build_quad_surface(mesh, w)
    print(f"{Q.n_quads} quads, areas in [{Q.areas.min():.4g}, {Q.areas.max():.4g}]")
    print(f"total quad area {Q.areas.sum():.12f} vs surface area {mesh.total_area:.12f}")

    pb = period_bundle(mesh, hd, w)
    phi, phi_star = first_kind_basis(mesh, w, hd, pb)
    worst = max(np.abs(quad_analyticity_residuals(Q, to_quad_function(p), hd)).max() for p in phi + phi_star)
    print(f"max analyticity residual of the first-kind basis: {worst:.2e}")

    Pi = quad_period_matrix(phi, phi_star)
    np.set_printoptions(precision=4, suppress=True)
    print("\nPi_T:\n", pb.Pi_T, "\nPi_T*:\n", pb.Pi_T_star, "\nquad period matrix:\n", Pi)
    print(f"\n|quad - (Pi_T + Pi_T*) / 2| = {np.linalg.norm(Pi - pb.Pi_Q):.2e}")


if __name__ == "__main__":
    main()
