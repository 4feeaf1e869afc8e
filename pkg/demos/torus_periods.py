"""Flat tori: the discrete period matrix equals the continuous one.

On ``C / (Z + eta Z)`` cut into ``n x n`` parallelograms, ``Re z`` and ``Im z``
are already discrete harmonic, so the period of the normalized first-kind
integral is exactly ``eta`` at every resolution.
"""

from discrete_riemann import gen
from discrete_riemann.periods import period_bundle
from discrete_riemann.topology import homology_basis


def main():
    print(f"{'eta':>12} {'n':>3} {'Pi_T':>22} {'|Pi_T - eta|':>14}")
    for eta in (1j, 0.3 + 0.8j, 0.5 + 2j):
        for n in (1, 2, 4, 8):
            mesh, cycles = gen.flat_torus(eta, n)
            Pi = period_bundle(mesh, homology_basis(mesh, cycles)).Pi_T[0, 0]
            print(f"{eta!s:>12} {n:3d} {Pi.real:10.6f}{Pi.imag:+11.6f}j {abs(Pi - eta):14.2e}")

    # the pyramid torus is not flat: the primal and dual matrices disagree
    mesh, cycles = gen.pyramid()
    pb = period_bundle(mesh, homology_basis(mesh, cycles))
    print(f"\npyramid: Pi_T = {pb.Pi_T[0, 0]:.6f}, Pi_T* = {pb.Pi_T_star[0, 0]:.6f}, Pi_Q = {pb.Pi_Q[0, 0]:.6f}")


if __name__ == "__main__":
    main()
