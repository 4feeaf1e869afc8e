"""Convergence of the period matrix on a genus-2 surface of three squares.

All twelve square corners meet at one cone point of angle ``6 pi``, so
``gamma_S = 1/3`` and the error is expected to decay like ``h^(2/3)``.  The
last column divides the error by that rate and should level off.
"""

import argparse

from discrete_riemann import gen
from discrete_riemann.cli import run_convergence


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=128)
    args = ap.parse_args(argv)
    ns = [n for n in (8, 16, 32, 64, 128, 256, 512) if n <= args.max_n]

    print("exact period matrix:\n", gen.GENUS2_PERIOD_MATRIX)
    rows = run_convergence("genus2_squares", ns)
    print(f"\n{'n':>5} {'h':>8} {'error':>8} {'scaled':>8} {'time':>8}")
    for r in rows:
        print(f"{r['n']:5d} {r['h']:8.4f} {r['err']:8.4f} {r['scaled']:8.3f} {r['seconds']:7.2f}s")


if __name__ == "__main__":
    main()
