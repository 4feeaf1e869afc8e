import numpy as np
import pytest
from hypothesis import given, strategies as st

from discrete_riemann import gen
from discrete_riemann.harmonic import (
    MultiValuedField,
    constant_field,
    dirichlet_energy,
    dual_difference,
    edge_difference,
    solve_harmonic,
)
from discrete_riemann.mesh import cotan_weights
from discrete_riemann.periods import (
    AnalyticSystem,
    PeriodBundle,
    SingularBlock,
    bilinear_sides,
    complex_matrix_from_json,
    energy_conservation_sides,
    energy_matrix,
    first_kind_b_periods,
    first_kind_basis,
    period_bundle,
    period_matrices_from_energy,
    period_symmetry_defect,
    riemann_bilinear_residual,
    solve_first_kind,
    validate_period_bundle,
)
from discrete_riemann.topology import homology_basis

from conftest import SURFACES, jitter_lengths


def _bundle(s):
    return period_bundle(s.mesh, s.hd, s.w)


def test_unit_torus_energy_matrix_is_identity():
    m, cycles = gen.flat_torus(1j, 1)
    E = energy_matrix(m, cotan_weights(m), homology_basis(m, cycles))
    assert np.allclose(E, np.eye(2))


def test_unit_torus_energy_matrix_brute_force():
    # one-vertex torus: u is fixed up to a constant, so Du = kappa @ P on every edge
    m, cycles = gen.flat_torus(1j, 1)
    hd = homology_basis(m, cycles)
    w = cotan_weights(m)
    K = hd.kappa
    assert np.allclose(energy_matrix(m, w, hd), K.T @ (w[:, None] * K))


def test_pyramid_energy_matrix():
    m, cycles = gen.pyramid()
    E = energy_matrix(m, cotan_weights(m), homology_basis(m, cycles))
    assert np.allclose(E, np.diag([2 / np.sqrt(3)] * 2))


def test_block_algebra_examples():
    pb = period_matrices_from_energy(np.eye(2))
    assert np.allclose([pb.Pi_T, pb.Pi_T_star, pb.Pi_Q], 1j)
    c = 2 / np.sqrt(3)
    pb = period_matrices_from_energy(np.diag([c, c]))
    assert np.allclose(pb.Pi_T, 2j / np.sqrt(3))
    assert np.allclose(pb.Pi_T_star, 1j * np.sqrt(3) / 2)
    assert np.allclose(pb.Pi_Q, 1j * (2 / np.sqrt(3) + np.sqrt(3) / 2) / 2)


def test_singular_block_rejected():
    with pytest.raises(SingularBlock):
        period_matrices_from_energy(np.diag([1.0, 0.0]))


@given(st.integers(0, 10**6))
def test_block_algebra_roundtrip(seed):
    # build E from a valid pair (Pi_T, Pi_T*) and recover it
    rng = np.random.default_rng(seed)
    g = int(rng.integers(1, 4))
    X = rng.normal(size=(g, g))
    S = rng.normal(size=(g, g))
    Y = S @ S.T + g * np.eye(g)  # Im Pi_T*
    T = rng.normal(size=(g, g))
    ImT = T @ T.T + g * np.eye(g)
    Yi = np.linalg.inv(Y)
    E = np.block([[X.T @ Yi @ X + ImT, -X.T @ Yi], [-Yi @ X, Yi]])
    pb = period_matrices_from_energy(E)
    assert np.allclose(pb.Pi_T, X + 1j * ImT)
    assert np.allclose(pb.Pi_T_star, X.T + 1j * Y)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_bundle_structure(s):
    pb = _bundle(s)
    assert pb.diagnostics["all_ok"], pb.diagnostics
    assert np.linalg.eigvalsh(pb.energy).min() > 0


def test_broken_bundle_flagged():
    Pi = np.array([[1j, 0.3j], [0.1j, 1j]])
    pb = PeriodBundle(2, np.zeros((0, 0)), Pi, Pi, Pi)
    d = validate_period_bundle(pb)
    assert not d["im_T_symmetric_ok"] and d["im_T_asymmetry"] > 0.1
    assert not d["all_ok"]


def test_pyramid_not_complex_linear():
    m, cycles = gen.pyramid()
    pb = period_bundle(m, homology_basis(m, cycles))
    assert pb.diagnostics["all_ok"]
    assert abs(pb.Pi_T[0, 0] - pb.Pi_T_star[0, 0]) > 0.1


def test_bundle_json_roundtrip():
    s = SURFACES[4]
    pb = _bundle(s)
    d = pb.to_dict()
    assert np.allclose(complex_matrix_from_json(d["Pi_T"]), pb.Pi_T)
    assert np.allclose(complex_matrix_from_json(d["Pi_Q"]), pb.Pi_Q)


@pytest.mark.parametrize("eta", [1j, 0.3 + 0.8j])
def test_torus_first_kind(eta):
    m, cycles = gen.flat_torus(eta, 3)
    hd = homology_basis(m, cycles)
    f = solve_first_kind(m, cotan_weights(m), hd, [1.0], cross_check=True)
    assert np.allclose(f.B(), eta)
    assert np.allclose(f.A(), 1)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_first_kind_zero_periods_is_constant(s):
    f = solve_first_kind(s.mesh, s.w, s.hd, np.zeros(s.hd.g))
    assert np.allclose(edge_difference(f, s.hd), 0, atol=1e-12)
    assert np.allclose(dual_difference(f, s.hd), 0, atol=1e-12)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_first_kind_two_routes(s, rng):
    # the energy-matrix route is cross-checked against the square system inside
    A = rng.normal(size=s.hd.g) + 1j * rng.normal(size=s.hd.g)
    pb = _bundle(s)
    f = solve_first_kind(s.mesh, s.w, s.hd, A, pb=pb, cross_check=True)
    g2 = AnalyticSystem(s.mesh, s.w, s.hd, (0, 0)).solve_first_kind(A)
    assert np.allclose(f.B(), g2.B(), atol=1e-9)
    assert np.allclose(f.B(), first_kind_b_periods(pb, A))
    assert np.allclose(dual_difference(f, s.hd), s.w * edge_difference(f, s.hd), atol=1e-10)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_first_kind_real_linearity(s, rng):
    A1, A2 = rng.normal(size=(2, s.hd.g)) + 1j * rng.normal(size=(2, s.hd.g))
    a, b = rng.normal(size=2)
    pb = _bundle(s)
    f1 = solve_first_kind(s.mesh, s.w, s.hd, A1, pb=pb, cross_check=False)
    f2 = solve_first_kind(s.mesh, s.w, s.hd, A2, pb=pb, cross_check=False)
    f12 = solve_first_kind(s.mesh, s.w, s.hd, a * A1 + b * A2, pb=pb, cross_check=False)
    assert np.allclose(f12.B(), a * f1.B() + b * f2.B())
    assert np.allclose(edge_difference(f12, s.hd), edge_difference(a * f1 + b * f2, s.hd))


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_period_matrix_columns_are_first_kind_b_periods(s):
    pb = _bundle(s)
    phi, phi_star = first_kind_basis(s.mesh, s.w, s.hd, pb)
    for l in range(s.hd.g):
        assert np.allclose(phi[l].B(), pb.Pi_T[:, l])
        assert np.allclose(phi_star[l].B() / 1j, pb.Pi_T_star[:, l])


def test_unit_torus_bilinear_example():
    m, cycles = gen.flat_torus(1j, 2)
    hd = homology_basis(m, cycles)
    w = cotan_weights(m)
    f = solve_first_kind(m, w, hd, [1.0])
    E, rhs = energy_conservation_sides(f, hd, w)
    assert np.isclose(E, 1) and np.isclose(rhs, 1)
    assert riemann_bilinear_residual(f, f, hd) < 1e-12


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_bilinear_identity_for_arbitrary_fields(s, rng):
    m, g = s.mesh, s.hd.g
    f = MultiValuedField(rng.normal(size=m.n_vertices), rng.normal(size=2 * g))
    f2 = MultiValuedField(rng.normal(size=m.n_vertices), rng.normal(size=2 * g), rng.normal(size=m.n_faces), rng.normal(size=2 * g))
    lhs, rhs = bilinear_sides(f, f2, s.hd)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
    c = constant_field(m, g, 1.0, 2.0)
    assert bilinear_sides(f, c, s.hd) == pytest.approx((0.0, 0.0), abs=1e-12)


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_energy_conservation_and_symmetry(s, rng):
    pb = _bundle(s)
    A1, A2 = rng.normal(size=(2, s.hd.g)) + 1j * rng.normal(size=(2, s.hd.g))
    f1 = solve_first_kind(s.mesh, s.w, s.hd, A1, pb=pb, cross_check=False)
    f2 = solve_first_kind(s.mesh, s.w, s.hd, A2, pb=pb, cross_check=False)
    E, rhs = energy_conservation_sides(f1, s.hd, s.w)
    assert E == pytest.approx(rhs, rel=1e-9)
    assert abs(period_symmetry_defect(f1, f2)) < 1e-9


@given(st.integers(0, 10**6))
def test_energy_positivity_without_delaunay(seed):
    rng = np.random.default_rng(seed)
    base, cycles = [gen.flat_torus(0.2 + 1.1j, 3), gen.genus2_squares(4)][seed % 2]
    m = jitter_lengths(base, rng, 0.3)
    hd = homology_basis(m, cycles)
    w = cotan_weights(m)
    E = energy_matrix(m, w, hd)
    assert np.linalg.eigvalsh(E).min() > 0
    pb = period_matrices_from_energy(E)
    assert pb.diagnostics["all_ok"]


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_energy_matrix_is_polarized_energy(s, rng):
    E = energy_matrix(s.mesh, s.w, s.hd)
    P = rng.normal(size=2 * s.hd.g)
    u = solve_harmonic(s.mesh, s.w, s.hd, P)
    assert P @ E @ P == pytest.approx(dirichlet_energy(u, s.hd, s.w), rel=1e-10)


def test_genus2_n8_period_matrix():
    m, cycles = gen.genus2_squares(8)
    pb = period_bundle(m, homology_basis(m, cycles))
    assert np.linalg.norm(pb.Pi_T - gen.GENUS2_PERIOD_MATRIX) == pytest.approx(0.611, abs=0.01)


def test_conjugate_first_kind_anchor_independence():
    s = SURFACES[5]
    A = np.array([1.0, -0.5j])
    f0 = solve_first_kind(s.mesh, s.w, s.hd, A, anchors=(0, 0))
    f1 = solve_first_kind(s.mesh, s.w, s.hd, A, anchors=(3, 7))
    assert np.allclose(f0.B(), f1.B())
    assert np.allclose(np.ptp(f0.v_base - f1.v_base), 0, atol=1e-10)
