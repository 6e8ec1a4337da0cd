import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eigx.mesh import build_level
from eigx.quad import accurate_rule, gauss_edge
from eigx.spaces import (BubbleSet, FeFunction, FeSpace, cr_interp_error_quadratic, interp_cr, interp_ecr,
                         interp_p1, interp_p3, interp_rt, project_p0, quadratic_field, sine_mode)

MESH = build_level("square5", 2)
EDGE = gauss_edge(5)


def _local_edge_bary(i):
    """Barycentric points along local edge i (from vertex i+1 to i+2)."""
    b = np.zeros((len(EDGE.points), 3))
    b[:, (i + 1) % 3] = 1 - EDGE.points
    b[:, (i + 2) % 3] = EDGE.points
    return b


@pytest.mark.parametrize("kind", ["CR", "ECR"])
def test_edge_mean_dofs_are_kronecker(kind):
    sp = FeSpace(MESH, kind)
    for i in range(3):
        vals, _ = sp.local_basis(_local_edge_bary(i))
        means = np.einsum("q,mqj->mj", EDGE.weights, vals)
        expected = np.zeros(sp.n_local)
        expected[i] = 1.0
        assert np.allclose(means, expected, atol=1e-13)


def test_ecr_element_mean_dof():
    sp = FeSpace(MESH, "ECR")
    rule = accurate_rule()
    vals, _ = sp.local_basis(rule.points)
    means = np.einsum("q,mqj->mj", rule.weights, vals)
    assert np.allclose(means, [0, 0, 0, 1], atol=1e-13)


def test_rt_flux_dofs_are_kronecker():
    sp = FeSpace(MESH, "RT0")
    g = MESH.geometry
    for i in range(3):
        vals, _ = sp.local_basis(_local_edge_bary(i))
        flux = np.einsum("q,mqjd,md->mj", EDGE.weights, vals, g.normals[:, i]) * g.edge_lengths[:, i, None]
        expected = np.zeros((MESH.n_triangles, 3))
        expected[:, i] = sp.local_sign[:, i]
        assert np.allclose(flux, expected, atol=1e-13)


def test_rt_divergence_is_flux_over_area():
    sp = FeSpace(MESH, "RT0")
    _, div = sp.local_basis(np.eye(3))
    assert np.allclose(div, sp.local_sign / MESH.geometry.area[:, None])


def test_p3_nodal_kronecker():
    m = build_level("square2", 2)
    sp = FeSpace(m, "P3")
    X = sp.node_coordinates()
    for k in range(m.n_triangles):
        bary = m.geometry.barycentric(k, X[sp.local_dofs[k]])
        vals, _ = sp.local_basis(bary, elements=[k])
        assert np.allclose(vals[0], np.eye(10), atol=1e-12)


def test_interpolants_reproduce_their_spaces():
    c = np.array([0.3, -1.2, 0.7])
    lin = lambda x, y: c[0] + c[1] * x + c[2] * y  # noqa: E731
    rule = accurate_rule()
    X = np.einsum("qk,mkd->mqd", rule.points, MESH.geometry.vertices)
    for f in (interp_cr(lin, MESH), interp_p1(lin, MESH)):
        assert np.allclose(f.values_at(rule.points), lin(X[..., 0], X[..., 1]), atol=1e-13)
    rad = lambda x, y: lin(x, y) + 2.5 * (x * x + y * y)  # noqa: E731
    assert np.allclose(interp_ecr(rad, MESH).values_at(rule.points), rad(X[..., 0], X[..., 1]), atol=1e-12)
    cub = lambda x, y: x**3 - 2 * x * y * y + y + 1  # noqa: E731
    assert np.allclose(interp_p3(cub, MESH).values_at(rule.points), cub(X[..., 0], X[..., 1]), atol=1e-12)
    rtf = lambda x, y: np.stack([1.0 + 0.5 * x, -2.0 + 0.5 * y], axis=-1)  # noqa: E731
    assert np.allclose(interp_rt(rtf, MESH).values_at(rule.points), rtf(X[..., 0], X[..., 1]), atol=1e-13)


def test_fortin_commutes_with_divergence():
    # cubic w: edge fluxes and element means are integrated exactly
    grad = lambda x, y: np.stack([3 * x * x - 2 * y * y + y, -4 * x * y + x], axis=-1)  # noqa: E731
    lap = lambda x, y: 6 * x - 4 * x  # noqa: E731
    q = interp_rt(grad, MESH)
    assert np.allclose(q.divergence(), project_p0(lap, MESH).coeffs, atol=1e-12)


def test_cr_is_continuous_in_edge_means():
    f = interp_cr(sine_mode(), MESH)
    jumps = f.edge_jump_integrals()
    assert np.abs(jumps).max() < 1e-13


def test_pointwise_eval_rejects_outside_point():
    f = interp_p1(lambda x, y: x, FeSpace(MESH, "P1"))
    with pytest.raises(ValueError):
        f.eval(0, [5.0, 5.0])


def test_function_is_immutable():
    f = FeFunction(FeSpace(MESH, "CR"), np.zeros(MESH.n_edges))
    with pytest.raises((ValueError, AttributeError)):
        f.coeffs[0] = 1.0


def test_bubble_properties():
    b = BubbleSet(MESH)
    k = 3
    g = MESH.geometry
    rule = accurate_rule()
    X = np.einsum("qk,kd->qd", rule.points, g.vertices[k])
    # phi_ECR has element mean 1 and vanishing edge means
    assert rule.weights @ b.ecr(k, X) == pytest.approx(1.0, abs=1e-13)
    for i in range(3):
        Xe = np.einsum("qk,kd->qd", _local_edge_bary(i), g.vertices[k])
        assert EDGE.weights @ b.ecr(k, Xe) == pytest.approx(0.0, abs=1e-13)
        for j in range(3):
            assert EDGE.weights @ b.cr(k, j, Xe) == pytest.approx(0.0, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=6, max_size=6))
def test_cr_quadratic_error_formula(coef):
    w = quadratic_field(np.array(coef))
    rule = accurate_rule()
    X = np.einsum("qk,mkd->mqd", rule.points, MESH.geometry.vertices)
    direct = w(X[..., 0], X[..., 1]) - interp_cr(w, MESH).values_at(rule.points)
    formula = cr_interp_error_quadratic(MESH, w.hess(0.0, 0.0), rule.points)
    assert np.allclose(direct, formula, atol=1e-12 * (1 + np.abs(coef).max()))


def test_dirichlet_masks():
    m = build_level("crack8", 2)
    cr = FeSpace(m, "CR", ("dirichlet", "crack_upper", "crack_lower"))
    assert cr.dirichlet_mask.sum() == len(m.boundary_edges)
    rt = FeSpace(m, "RT0")
    assert rt.dirichlet_mask.sum() == 0  # no Neumann edges on the crack domain
    with pytest.raises(ValueError):
        FeSpace(m, "Q2")


def test_cr_interpolation_error_second_order():
    from eigx.analysis import _Sampler, observed_rates

    errs = []
    for L in (4, 5, 6, 7):
        m = build_level("square2", L)
        s = _Sampler(m)
        d = s.field(sine_mode()) - s.field(interp_cr(sine_mode(), m))
        errs.append(np.sqrt(s.inner(d, d)))
    assert np.all(observed_rates(errs) >= 1.95)


def test_ecr_bubble_interpolation():
    b = BubbleSet(MESH)
    g = MESH.geometry
    k = 2

    def phi(x, y):
        r2 = (x - g.centroid[k, 0]) ** 2 + (y - g.centroid[k, 1]) ** 2
        return 2.0 - 36.0 / g.H2[k] * r2

    # restrict phi_ECR of element k to element k
    sub = build_level("square5", 2)
    f = interp_ecr(phi, sub)
    rule = accurate_rule()
    X = np.einsum("qk,kd->qd", rule.points, g.vertices[k])
    assert np.allclose(f.values_at(rule.points, elements=[k])[0], b.ecr(k, X), atol=1e-12)
    # and its CR interpolant vanishes on that element
    assert np.allclose(interp_cr(phi, sub).coeffs[MESH.tri_edges[k]], 0, atol=1e-13)


def test_rt_reproduces_constants_and_radial():
    rule = accurate_rule()
    c = interp_rt(lambda x, y: np.stack([0.7 + 0 * x, -1.3 + 0 * y], -1), MESH).values_at(rule.points)
    assert np.allclose(c, [0.7, -1.3], atol=1e-13)
    r = interp_rt(lambda x, y: np.stack([x - 0.4, y + 0.2], -1), MESH)
    X = np.einsum("qk,mkd->mqd", rule.points, MESH.geometry.vertices)
    assert np.allclose(r.values_at(rule.points), X - [0.4, -0.2], atol=1e-13)
    assert np.allclose(r.divergence(), 2.0)


def test_p0_projection_of_linear_is_centroid_value():
    p = project_p0(lambda x, y: 2 * x - y + 1, MESH)
    c = MESH.geometry.centroid
    assert np.allclose(p.coeffs, 2 * c[:, 0] - c[:, 1] + 1, atol=1e-14)


def test_pointwise_basis_values():
    sp_ = FeSpace(MESH, "CR")
    e = int(MESH.tri_edges[0, 1])
    f = sp_.basis_function(e)
    assert f.eval(0, MESH.geometry.midpoints[0, 1]) == pytest.approx(1.0, abs=1e-14)
    rt = FeSpace(MESH, "RT0").basis_function(e)
    K, g = 0, MESH.geometry
    assert rt.div_eval(K, g.centroid[K]) == pytest.approx(FeSpace(MESH, "RT0").local_sign[K, 1] / g.area[K])
    # its normal component is constant on the edge: flux 1 spread over |e|
    n = MESH.edge_normals[e]
    assert rt.eval(K, g.midpoints[K, 1]) @ n == pytest.approx(1.0 / g.edge_lengths[K, 1], rel=1e-12)
