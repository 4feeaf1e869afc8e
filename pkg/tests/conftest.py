import numpy as np
import pytest
from hypothesis import settings

from discrete_riemann import gen
from discrete_riemann.abelian import Divisor
from discrete_riemann.mesh import _from_twin, cotan_weights
from discrete_riemann.topology import homology_basis

settings.register_profile("default", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("default")


def with_edge_lengths(mesh, L):
    """Same gluing, new per-edge lengths."""
    flat = np.asarray(L, dtype=float)[mesh.halfedge_edge]
    return _from_twin(flat.reshape(-1, 3), np.asarray(mesh.twin))


def jitter_lengths(mesh, rng, amount=0.15, tries=200):
    """Randomly rescale every edge, keeping all triangle inequalities strict."""
    base = mesh.edge_length
    for _ in range(tries):
        L = base * (1 + amount * rng.uniform(-1, 1, base.size))
        try:
            return with_edge_lengths(mesh, L)
        except ValueError:
            continue
    raise RuntimeError("could not jitter lengths")


class Surface:
    def __init__(self, name, mesh, cycles=None):
        self.name = name
        self.mesh = mesh
        self.hd = homology_basis(mesh, cycles)
        self.w = cotan_weights(mesh)


def _surfaces():
    rng = np.random.default_rng(7)
    return [
        Surface("torus_i_3", *gen.flat_torus(1j, 3)),
        Surface("torus_skew_3", *gen.flat_torus(0.3 + 0.8j, 3)),
        Surface("equilateral_torus_2", *gen.equilateral_torus(2)),
        Surface("pyramid", *gen.pyramid()),
        Surface("genus2_4", *gen.genus2_squares(4)),
        Surface("genus2_eq_4", *gen.genus2_squares(4, equilateral=True)),
        Surface("jittered_torus_3", jitter_lengths(gen.flat_torus(0.2 + 1.1j, 3)[0], rng)),
        Surface("jittered_genus2_4", jitter_lengths(gen.genus2_squares(4)[0], rng)),
    ]


SURFACES = _surfaces()


@pytest.fixture(params=SURFACES, ids=lambda s: s.name)
def surface(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def disk_patch(mesh, rng, size):
    """Breadth-first patch of up to ``size`` faces around a random face."""
    start = int(rng.integers(mesh.n_faces))
    faces, frontier = {start}, [start]
    while len(faces) < size and frontier:
        f = frontier.pop(0)
        for h in range(3 * f, 3 * f + 3):
            g = int(mesh.twin[h]) // 3
            if g not in faces and len(faces) < size:
                faces.add(g)
                frontier.append(g)
    return sorted(faces)


def random_divisor(mesh, rng, max_each=3):
    """Random admissible divisor with at most ``max_each`` cells of each kind."""
    D = Divisor.zero(mesh)
    for arr, sign in ((D.vertex, -1), (D.edge, 1), (D.face, -1)):
        k = int(rng.integers(0, max_each + 1))
        arr[rng.choice(arr.size, size=min(k, arr.size), replace=False)] = sign
    return D


# (criterion, passed, detail) lines collected by the acceptance suite
ACCEPTANCE_RESULTS = []


def report_criterion(name, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
