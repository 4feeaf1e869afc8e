import numpy as np
import pytest
from hypothesis import given, strategies as st

from discrete_riemann import gen
from discrete_riemann.harmonic import (
    MultiValuedField,
    NotHarmonic,
    ZeroWeightEdge,
    conjugate_function,
    constant_field,
    dirichlet_energy,
    dual_difference,
    dual_energy,
    edge_difference,
    energy_pairing,
    face_energies,
    solve_harmonic,
    stokes_sides,
    triangle_interpolation_energy,
    vertex_divergence,
)
from discrete_riemann.mesh import cotan_weights
from discrete_riemann.topology import homology_basis

from conftest import SURFACES, disk_patch, jitter_lengths


def _torus(eta, n):
    m, cycles = gen.flat_torus(eta, n)
    return m, homology_basis(m, cycles), cotan_weights(m), gen.flat_torus_edge_vectors(eta, n)


def _random_field(s, rng, with_im=True):
    g = s.hd.g
    return MultiValuedField(
        rng.normal(size=s.mesh.n_vertices),
        rng.normal(size=2 * g),
        rng.normal(size=s.mesh.n_faces) if with_im else None,
        rng.normal(size=2 * g) if with_im else None,
    )


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_constants_have_zero_differences(s):
    f = constant_field(s.mesh, s.hd.g, 2.5, -1.0)
    assert np.allclose(edge_difference(f, s.hd), 0)
    assert np.allclose(dual_difference(f, s.hd), 0)
    assert dirichlet_energy(f, s.hd, s.w) == 0
    f2 = _random_field(s, np.random.default_rng(0))
    assert energy_pairing(f2, f, s.hd, s.w) == 0


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_loop_sums_give_periods(s, rng):
    f = _random_field(s, rng)
    for j, (c, d) in enumerate(zip(s.hd.basis_cycles, s.hd.dual_basis_loops)):
        assert np.isclose(edge_difference(f, s.hd, np.asarray(c)).sum(), f.p_re[j])
        assert np.isclose(dual_difference(f, s.hd, np.asarray(d)).sum(), f.p_im[j])


@pytest.mark.parametrize("eta", [1j, 0.3 + 0.8j, 0.5 + 2j])
@pytest.mark.parametrize("n", [1, 3])
def test_harmonic_on_flat_torus_is_linear(eta, n):
    m, hd, w, vec = _torus(eta, n)
    A = 0.7 - 0.4j
    f = solve_harmonic(m, w, hd, [A.real, (A * eta).real])
    assert np.allclose(edge_difference(f, hd), (A * vec).real, atol=1e-12)


def test_unit_torus_energies():
    m, hd, w, vec = _torus(1j, 4)
    f = solve_harmonic(m, w, hd, [1.0, 0.0])
    assert np.allclose(edge_difference(f, hd), vec.real)
    assert np.isclose(dirichlet_energy(f, hd, w), 1.0)
    g = solve_harmonic(m, w, hd, [0.0, 1.0])
    assert np.isclose(energy_pairing(f, g, hd, w), 0.0, atol=1e-14)


def test_first_kind_on_grid_torus():
    # u = x on the unit torus: v = y + const, constant across zero-weight diagonals
    n = 3
    m, hd, w, vec = _torus(1j, n)
    f = conjugate_function(m, w, hd, solve_harmonic(m, w, hd, [1.0, 0.0]))
    dv = dual_difference(f, hd)
    horizontal = np.isclose(vec.imag, 0)
    vertical = np.isclose(vec.real, 0)
    assert np.allclose(np.abs(dv[horizontal]), 1 / n)
    assert np.allclose(dv[horizontal], vec.real[horizontal])
    assert np.allclose(dv[~horizontal], 0, atol=1e-12)
    assert np.allclose(edge_difference(f, hd)[vertical], 0, atol=1e-12)
    assert np.allclose(f.p_im, [0, 1])
    assert np.isclose(dirichlet_energy(f, hd, w), 1.0)


def test_zero_weight_rejected_by_dual_energy():
    m, hd, w, _ = _torus(1j, 2)
    f = conjugate_function(m, w, hd, solve_harmonic(m, w, hd, [1.0, 0.0]))
    with pytest.raises(ZeroWeightEdge):
        dual_energy(f, hd, w)


def test_conjugate_energy_on_equilateral_torus():
    m, cycles = gen.equilateral_torus(3)
    hd, w = homology_basis(m, cycles), cotan_weights(m)
    f = conjugate_function(m, w, hd, solve_harmonic(m, w, hd, [1.0, 0.5]))
    assert np.isclose(dual_energy(f, hd, w), dirichlet_energy(f, hd, w))


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_zero_periods_give_zero(s):
    f = solve_harmonic(s.mesh, s.w, s.hd, np.zeros(2 * s.hd.g))
    assert np.allclose(f.u_base, 0)
    f = conjugate_function(s.mesh, s.w, s.hd, f)
    assert np.allclose(f.v_base, 0) and np.allclose(f.p_im, 0)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_harmonic_is_linear_and_divergence_free(s, rng):
    p1, p2 = rng.normal(size=(2, 2 * s.hd.g))
    f1 = solve_harmonic(s.mesh, s.w, s.hd, p1)
    f2 = solve_harmonic(s.mesh, s.w, s.hd, p2)
    f12 = solve_harmonic(s.mesh, s.w, s.hd, p1 + p2)
    assert np.allclose(edge_difference(f1 + f2, s.hd), edge_difference(f12, s.hd))
    assert np.allclose(vertex_divergence(f12, s.hd, s.w), 0, atol=1e-10)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_conjugate_satisfies_cauchy_riemann(s, rng):
    f = solve_harmonic(s.mesh, s.w, s.hd, rng.normal(size=2 * s.hd.g))
    f = conjugate_function(s.mesh, s.w, s.hd, f, anchor_face=int(rng.integers(s.mesh.n_faces)))
    assert np.allclose(dual_difference(f, s.hd), s.w * edge_difference(f, s.hd), atol=1e-10)


def test_non_harmonic_rejected(rng):
    s = SURFACES[1]
    f = MultiValuedField(rng.normal(size=s.mesh.n_vertices), np.zeros(2))
    with pytest.raises(NotHarmonic):
        conjugate_function(s.mesh, s.w, s.hd, f)


def test_interpolation_energy_examples():
    assert triangle_interpolation_energy([np.sqrt(2), 1, 1], [0, 1, 0]) == pytest.approx(0.5)
    assert triangle_interpolation_energy([1, 1, 1], [0, 1, 1]) == pytest.approx(1 / np.sqrt(3))
    assert triangle_interpolation_energy([3, 4, 5], [2, 2, 2]) == 0


@given(
    st.tuples(*[st.floats(0.5, 2.0)] * 3).filter(lambda t: max(t) < 0.95 * (sum(t) - max(t))),
    st.tuples(*[st.floats(-3, 3)] * 3),
)
def test_interpolation_energy_matches_gradient(lengths, values):
    a, b, c = lengths
    # place the triangle and compute the gradient of the linear interpolant directly
    x2 = (b * b + c * c - a * a) / (2 * c)
    P = np.array([[0, 0], [c, 0], [x2, np.sqrt(b * b - x2 * x2)]])
    M = np.column_stack([P, np.ones(3)])
    grad = np.linalg.solve(M, values)[:2]
    area = 0.5 * abs(np.linalg.det(M))
    assert triangle_interpolation_energy(lengths, values) == pytest.approx(area * grad @ grad, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_face_energies_sum_to_dirichlet(s, rng):
    f = _random_field(s, rng, with_im=False)
    fe = face_energies(f, s.hd)
    assert np.isclose(fe.sum(), dirichlet_energy(f, s.hd, s.w))
    m = s.mesh
    h = np.arange(3 * m.n_faces).reshape(-1, 3)
    u = f.u_base[m.corner_vertex]
    # per face: corner values lifted by the transported differences
    du = edge_difference(f, s.hd, h)
    lifted = np.stack([u[:, 0], u[:, 0] - du[:, 2], u[:, 0] + du[:, 1]], axis=1)
    direct = [triangle_interpolation_energy(m.lengths[k], lifted[k]) for k in range(m.n_faces)]
    assert np.allclose(fe, direct)


@given(st.integers(0, 10**6), st.integers(1, 30))
def test_stokes_formula(seed, size):
    rng = np.random.default_rng(seed)
    m, _ = gen.flat_torus(0.4 + 1.3j, 8)
    u = rng.normal(size=m.n_vertices)
    v = rng.normal(size=m.n_faces)
    lhs, rhs = stokes_sides(m, disk_patch(m, rng, size), u, v)
    assert lhs == pytest.approx(rhs, abs=1e-10)


@given(st.integers(0, 10**6))
def test_energy_of_harmonic_is_minimal(seed):
    rng = np.random.default_rng(seed)
    m, cycles = gen.genus2_squares(4)
    m = jitter_lengths(m, rng, 0.1)
    hd = homology_basis(m, cycles)
    w = cotan_weights(m)
    f = solve_harmonic(m, w, hd, rng.normal(size=4))
    E0 = dirichlet_energy(f, hd, w)
    pert = MultiValuedField(f.u_base + rng.normal(size=m.n_vertices) * 10 ** rng.uniform(-6, 0), f.p_re)
    assert dirichlet_energy(pert, hd, w) >= E0 - 1e-12
