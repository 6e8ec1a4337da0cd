import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from eigx.analysis import mixed_solution
from eigx.assembly import (CoefficientField, apply_dirichlet, assemble_mass, assemble_mixed_rt, assemble_p0_load,
                           assemble_stiffness, eliminate_unit_diagonal, export_matrix_market, jump_coefficient,
                           local_stiffness)
from eigx.mesh import build_initial, build_level
from eigx.solve import solve_sym_linear
from eigx.spaces import FeSpace, project_p0, sine_mode
from oracles import cr_p1_stiffness_unit_square_diagonal, tri_area


def test_cr_single_interior_dof_energy():
    # square2 level 1: one free CR DOF on the diagonal, energy 2 * 4 = 8
    sp_ = FeSpace(build_initial("square2"), "CR")
    K = apply_dirichlet(sp_, assemble_stiffness(sp_)).matrix
    assert K.shape == (1, 1)
    assert K[0, 0] == pytest.approx(8.0, rel=1e-14)


def test_cr_local_stiffness_matches_hand_computation():
    m = build_initial("square2")
    loc = local_stiffness(FeSpace(m, "CR"))
    # triangle 0 is (0,0),(1,0),(1,1): congruent to the oracle triangle
    ref = cr_p1_stiffness_unit_square_diagonal()
    assert np.allclose(np.sort(np.linalg.eigvalsh(loc[0])), np.sort(np.linalg.eigvalsh(ref)))


@pytest.mark.parametrize("kind", ["CR", "ECR", "P1", "P3"])
def test_stiffness_symmetric_and_kills_constants(kind):
    m = build_level("square5", 3)
    space = FeSpace(m, kind)
    K = assemble_stiffness(space)
    assert (K != K.T).nnz == 0
    one = np.ones(space.n_dofs)
    if kind == "ECR":
        one[m.n_edges:] = 1.0  # element means of 1
    assert np.abs(K @ one).max() < 1e-11


@pytest.mark.parametrize("kind", ["CR", "ECR", "P1", "P3", "P0"])
def test_mass_integrates_one(kind):
    m = build_level("crack8", 3)
    space = FeSpace(m, kind)
    Mm = assemble_mass(space)
    one = np.ones(space.n_dofs)
    assert one @ Mm @ one == pytest.approx(4.0, rel=1e-12)


def test_rt_mass_positive_definite():
    m = build_level("square2", 3)
    Mm = assemble_mass(FeSpace(m, "RT0")).toarray()
    assert np.linalg.eigvalsh(Mm).min() > 0


def test_coefficient_validation_and_jump():
    m = build_level("triangle_jump", 3)
    A = jump_coefficient(m)
    below = m.geometry.centroid[:, 1] < 1
    assert np.all(A.values[below] == 2.0) and np.all(A.values[~below] == 1.0)
    with pytest.raises(ValueError):
        CoefficientField(np.array([1.0, -1.0]))
    space = FeSpace(m, "CR")
    K1 = assemble_stiffness(space)
    K2 = assemble_stiffness(space, CoefficientField.constant(m, 2.0))
    assert np.allclose((2 * K1 - K2).data, 0)


def test_constrained_system_round_trip():
    m = build_level("square2", 3)
    space = FeSpace(m, "CR")
    cs = apply_dirichlet(space, assemble_stiffness(space))
    x = np.arange(space.n_dofs, dtype=float)
    y = cs.scatter(cs.restrict(x))
    assert np.array_equal(y[cs.free], x[cs.free]) and np.all(y[cs.eliminated] == 0)
    with pytest.raises(ValueError):
        apply_dirichlet(space, assemble_stiffness(space), tags=("neumann",))


def test_unit_diagonal_elimination_matches_reduction():
    m = build_level("square2", 3)
    space = FeSpace(m, "CR")
    K = assemble_stiffness(space)
    E = eliminate_unit_diagonal(K, space.dirichlet_mask)
    red = apply_dirichlet(space, K).matrix
    assert np.allclose(E[space.free_dofs][:, space.free_dofs].toarray(), red.toarray())
    d = space.dirichlet_mask
    assert np.allclose(E[d][:, d].toarray(), np.eye(d.sum()))


def test_p0_load_against_p0_integral():
    m = build_level("square5", 2)
    space = FeSpace(m, "CR")
    f = project_p0(lambda x, y: 1.0 + 0 * x, m)
    b = assemble_p0_load(space, f)
    # CR basis functions sum to one on each element
    assert b.sum() == pytest.approx(1.0, rel=1e-13)


def test_mixed_solution_divergence_exact():
    m = build_level("square5", 3)
    load = project_p0(lambda x, y: 2 * np.pi**2 * sine_mode()(x, y), m)
    sigma, _ = mixed_solution(m, load)
    assert np.abs(sigma.divergence() + load.coeffs).max() < 1e-10 * np.abs(load.coeffs).max()


def test_mixed_system_symmetric_indefinite():
    m = build_level("triangle_jump", 2)
    load = project_p0(lambda x, y: 1.0 + 0 * x, m)
    ms = assemble_mixed_rt(m, load)
    assert (ms.matrix != ms.matrix.T).nnz == 0
    ev = np.linalg.eigvalsh(ms.matrix.toarray())
    assert ev.min() < 0 < ev.max()
    x = solve_sym_linear(ms.matrix, ms.rhs, definite=False)
    sigma, _ = ms.split(x)
    # the Neumann side carries zero flux
    assert np.all(sigma.coeffs[m.edges_with_tags(["neumann"])] == 0)


def test_matrix_market_export(tmp_path):
    m = build_level("square2", 2)
    K = assemble_stiffness(FeSpace(m, "CR"))
    export_matrix_market(K, tmp_path / "k.mtx")
    back = sp.csr_matrix(scipy.io.mmread(str(tmp_path / "k.mtx")))
    assert np.allclose(back.toarray(), K.toarray())


def test_oracle_area_helper():
    assert tri_area([[0, 0], [2, 0], [0, 2]]) == 2.0


def test_cr_stiffness_reproduces_linear_energy():
    m = build_level("square5", 3)
    space = FeSpace(m, "CR")
    K = assemble_stiffness(space, jump_coefficient(m))
    from eigx.spaces import interp_cr

    v = interp_cr(lambda x, y: 2 * x - y, m).coeffs
    w = interp_cr(lambda x, y: x + 3 * y, m).coeffs
    A = jump_coefficient(m).values
    exact = ((2 * 1 - 1 * 3) * A * m.geometry.area).sum()
    assert v @ K @ w == pytest.approx(exact, rel=1e-12)


def test_p0_mass_row_sums_and_ecr_local_mass():
    from eigx.assembly import local_mass
    from eigx.quad import collapsed_gauss

    m = build_level("square5", 2)
    P0 = assemble_mass(FeSpace(m, "P0"))
    assert np.allclose(np.asarray(P0.sum(axis=1)).ravel(), m.geometry.area)
    ecr = FeSpace(m, "ECR")
    assert np.allclose(local_mass(ecr), local_mass(ecr, collapsed_gauss(8)), rtol=1e-13, atol=1e-16)


def test_zero_load_mixed_solution():
    m = build_level("square2", 3)
    sigma, u = mixed_solution(m, project_p0(lambda x, y: 0 * x, m))
    assert np.all(sigma.coeffs == 0) and np.all(u.coeffs == 0)


def test_assembly_bitwise_deterministic():
    m = build_level("crack8", 3)
    a = assemble_stiffness(FeSpace(m, "ECR"))
    b = assemble_stiffness(FeSpace(m, "ECR"))
    assert np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices) and np.array_equal(a.data, b.data)


def test_mixed_stiffness_rejects_rt():
    with pytest.raises(ValueError):
        assemble_stiffness(FeSpace(build_initial("square2"), "RT0"))
