"""Command-line interface for discrete Riemann surface computations.

Subcommands print JSON to stdout; ``--csv PATH`` writes a table instead.
Exit status is 0 on success, 2 when the input fails validation and 3 when a
solver fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import gen
from .abelian import Divisor, NotAdmissible, RankAmbiguous, TooLarge, riemann_roch
from .harmonic import NotHarmonic, SolverFailure, ZeroWeightEdge
from .mesh import MeshError, cotan_weights, format_mesh, geometry_report, read_mesh
from .periods import ConsistencyFailure, SingularBlock, complex_matrix_from_json, frobenius_error, period_bundle
from .quad import DegenerateDiagonal, NonPositiveQuadArea, NotDelaunay, build_quad_surface
from .topology import TopologyError, homology_basis

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3

VALIDATION_ERRORS = (
    MeshError,
    TopologyError,
    NotAdmissible,
    NotDelaunay,
    NonPositiveQuadArea,
    DegenerateDiagonal,
    ZeroWeightEdge,
    TooLarge,
    gen.DegenerateEta,
    ValueError,
    OSError,
)
SOLVER_ERRORS = (SolverFailure, NotHarmonic, ConsistencyFailure, SingularBlock, RankAmbiguous, np.linalg.LinAlgError)


def _load(path, basis_path=None):
    mesh = read_mesh(path)
    cycles = None
    if basis_path:
        with open(basis_path) as fh:
            cycles = json.load(fh)
    return mesh, homology_basis(mesh, cycles) if mesh.genus > 0 or cycles else None


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _emit(args, payload, header=None, rows=None):
    if getattr(args, "csv", None) and header is not None:
        _write_csv(args.csv, header, rows)
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _matrix_rows(name, a):
    return [[name, i, j, float(z.real), float(z.imag)] for (i, j), z in np.ndenumerate(np.asarray(a, dtype=complex))]


# -- subcommands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        mesh = read_mesh(args.mesh)
    except MeshError as exc:
        _emit(args, {"valid": False, "error": type(exc).__name__, "message": str(exc)})
        return EXIT_INVALID
    r = geometry_report(mesh)
    payload = {
        "valid": True,
        "n_vertices": mesh.n_vertices,
        "n_edges": mesh.n_edges,
        "n_faces": mesh.n_faces,
        "genus": r.genus,
        "max_edge_length": r.max_edge_length,
        "min_angle": r.min_angle,
        "gamma_S": r.gamma_S,
        "is_delaunay": r.is_delaunay,
        "delaunay_margin": r.delaunay_margin,
    }
    _emit(args, payload, ["key", "value"], list(payload.items()))
    return EXIT_OK


def cmd_periods(args) -> int:
    mesh, hd = _load(args.mesh, args.basis)
    if hd is None:
        raise TopologyError("surface has genus 0: no periods")
    pb = period_bundle(mesh, hd, tol=args.tol)
    payload = pb.to_dict()
    payload["basis_cycles"] = [list(map(int, c)) for c in hd.basis_cycles]
    rows = []
    for name in ("Pi_T", "Pi_T_star", "Pi_Q"):
        rows += _matrix_rows(name, getattr(pb, name))
    _emit(args, payload, ["matrix", "row", "col", "re", "im"], rows)
    return EXIT_OK


def scaled_error(err: float, h: float, gamma_S: float) -> float:
    """Error divided by the expected rate ``h^{2 gamma_S}``, ``h`` or ``h |log h|``."""
    if np.isclose(gamma_S, 0.5):
        return err / (h * abs(np.log(h)))
    if gamma_S < 0.5:
        return err * h ** (-2 * gamma_S)
    return err / h


def run_convergence(family: str, ns, reference=None, eta=None, output=None, tol: float = 1e-10) -> list[dict]:
    """Error of the discrete period matrix against ``reference`` for each ``n``.

    ``family`` is ``flat_torus`` (default reference ``[[eta]]``) or
    ``genus2_squares`` (default reference the three-square period matrix).
    Rows hold ``n, h, err, scaled, seconds``; ``h`` is the measured maximal
    edge length.  With ``output`` the rows are also written as CSV.
    """
    if family == "flat_torus":
        eta = complex(1j if eta is None else eta)
        make = lambda n: gen.flat_torus(eta, n)  # noqa: E731
        ref = np.array([[eta]]) if reference is None else reference
    elif family == "genus2_squares":
        make = gen.genus2_squares
        ref = gen.GENUS2_PERIOD_MATRIX if reference is None else reference
    else:
        raise ValueError(f"unknown family {family!r}")
    ref = np.asarray(ref, dtype=complex)
    rows = []
    for n in ns:
        t0 = time.perf_counter()
        mesh, cycles = make(int(n))
        hd = homology_basis(mesh, cycles)
        pb = period_bundle(mesh, hd, cotan_weights(mesh), tol)
        r = geometry_report(mesh)
        err = frobenius_error(pb.Pi_T, ref)
        rows.append(
            {
                "n": int(n),
                "h": r.h,
                "err": err,
                "scaled": scaled_error(err, r.h, r.gamma_S),
                "seconds": time.perf_counter() - t0,
            }
        )
    if output:
        _write_csv(output, ["n", "h", "err", "scaled"], [[d["n"], d["h"], d["err"], d["scaled"]] for d in rows])
    return rows


def _parse_complex(text):
    if text is None:
        return None
    parts = [float(x) for x in text.split(",")]
    return complex(parts[0], parts[1] if len(parts) > 1 else 0.0)


def cmd_convergence(args) -> int:
    ref = None
    if args.reference:
        with open(args.reference) as fh:
            data = json.load(fh)
        if isinstance(data, dict):
            data = data.get("Pi_S", data.get("Pi_T"))
        ref = complex_matrix_from_json(data)
    ns = [int(x) for x in args.n.split(",")]
    rows = run_convergence(args.family, ns, ref, _parse_complex(args.eta), args.csv, args.tol)
    if not args.csv:
        json.dump(rows, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return EXIT_OK


def cmd_riemann_roch(args) -> int:
    mesh, hd = _load(args.mesh, args.basis)
    if hd is None:
        raise TopologyError("surface has genus 0")
    with open(args.divisor) as fh:
        D = Divisor.from_json(mesh, fh.read())
    res = riemann_roch(mesh, cotan_weights(mesh), hd, D)
    payload = res.to_dict()
    _emit(args, payload, ["key", "value"], list(payload.items()))
    return EXIT_OK


def cmd_quadrangulate(args) -> int:
    mesh = read_mesh(args.mesh)
    Q = build_quad_surface(mesh)
    payload = Q.to_dict()
    rows = []
    for q in payload["quads"]:
        rows.append([q["edge"], *q["black"], *q["white"], *[x for z in q["chart"] for x in z], q["area"]])
    header = ["edge", "t", "h", "r", "l"] + [f"z{k}_{p}" for k in range(1, 5) for p in ("re", "im")] + ["area"]
    _emit(args, payload, header, rows)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.name == "flat_torus":
        mesh, cycles = gen.flat_torus(_parse_complex(args.eta) or 1j, args.n)
    elif args.name == "equilateral_torus":
        mesh, cycles = gen.equilateral_torus(args.n)
    elif args.name == "pyramid":
        mesh, cycles = gen.pyramid()
    else:
        mesh, cycles = gen.genus2_squares(args.n, equilateral=args.equilateral)
    text = format_mesh(mesh)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.basis_out:
        with open(args.basis_out, "w") as fh:
            json.dump([list(map(int, c)) for c in cycles], fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="discrete-riemann", description=__doc__.splitlines()[0])
    p.add_argument("--tol", type=float, default=1e-10, help="solver tolerance (default 1e-10)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--csv", metavar="PATH", help="write a CSV table instead of JSON")
        return sp

    sp = add("validate", cmd_validate, "check a mesh and report its geometry")
    sp.add_argument("mesh")

    sp = add("periods", cmd_periods, "discrete period matrices")
    sp.add_argument("mesh")
    sp.add_argument("--basis", help="JSON list of closed half-edge walks alpha_1..g, beta_1..g")

    sp = add("convergence", cmd_convergence, "period-matrix error under refinement")
    sp.add_argument("--family", required=True, choices=["flat_torus", "genus2_squares"])
    sp.add_argument("--n", required=True, help="comma-separated refinement levels")
    sp.add_argument("--reference", help="JSON period matrix as [re, im] pairs")
    sp.add_argument("--eta", help="torus modulus re,im (flat_torus only)")

    sp = add("riemann-roch", cmd_riemann_roch, "l(-D) and i(D) for a divisor")
    sp.add_argument("mesh")
    sp.add_argument("--divisor", required=True, help='JSON list of ["vertex"|"edge"|"face", index, value]')
    sp.add_argument("--basis", help="JSON basis cycles as for periods")

    sp = add("quadrangulate", cmd_quadrangulate, "Delaunay-Voronoi quadrangulation")
    sp.add_argument("mesh")

    sp = add("gen", cmd_gen, "write an example surface in the text mesh format")
    sp.add_argument("name", choices=sorted(gen.GENERATORS))
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--eta", help="re,im (flat_torus)")
    sp.add_argument("--equilateral", action="store_true", help="genus2_squares with unit sides")
    sp.add_argument("-o", "--output", help="mesh file (default stdout)")
    sp.add_argument("--basis-out", help="write the basis cycles as JSON")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VALIDATION_ERRORS as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
