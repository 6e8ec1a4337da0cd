import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eigx.quad import (accurate_rule, collapsed_gauss, default_rule, dunavant, gauss_edge, integrate_edge,
                       integrate_triangle, physical_points, reference_moment)
from oracles import monomial_integral_reference

RULES = [(dunavant(2), 2), (dunavant(4), 4), (dunavant(6), 6), (collapsed_gauss(4), 7), (collapsed_gauss(8), 15)]


@pytest.mark.parametrize("rule,degree", RULES)
def test_triangle_rule_exact_on_monomials(rule, degree):
    # points are barycentric (psi1, psi2, psi3); psi2 = x, psi3 = y on the unit right triangle
    x, y = rule.points[:, 1], rule.points[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            approx = 0.5 * rule.weights @ (x**a * y**b)
            assert approx == pytest.approx(monomial_integral_reference(a, b), rel=1e-13, abs=1e-16)


@pytest.mark.parametrize("rule,degree", RULES)
def test_weights_sum_to_one_and_points_inside(rule, degree):
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(rule.points >= -1e-14)
    assert np.allclose(rule.points.sum(axis=1), 1.0)


def test_reference_moment_matches_monomial_formula():
    for a in range(5):
        for b in range(5):
            assert reference_moment(0, a, b) * 0.5 == pytest.approx(monomial_integral_reference(a, b), rel=1e-14)


def test_edge_rule_exact():
    r = gauss_edge(5)
    for p in range(10):
        assert r.weights @ r.points**p == pytest.approx(1.0 / (p + 1), rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_integrate_quadratic_on_random_triangle(verts, coef):
    V = np.array(verts).reshape(1, 3, 2)
    area = 0.5 * abs(np.linalg.det(np.array([V[0, 1] - V[0, 0], V[0, 2] - V[0, 0]])))
    if area < 1e-2:
        return
    c = np.array(coef)

    def f(x, y):
        return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y

    lo = integrate_triangle(dunavant(2), V, np.array([area]), f)
    hi = integrate_triangle(accurate_rule(), V, np.array([area]), f)
    assert lo[0] == pytest.approx(hi[0], rel=1e-11, abs=1e-11)


def test_physical_points_centroid():
    V = np.array([[[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]]])
    X = physical_points(V, dunavant(2))
    assert np.allclose(X[0].mean(axis=0), [2 / 3, 1.0])


def test_integrate_edge_length_and_linear():
    a, b = np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])
    assert integrate_edge(gauss_edge(), a, b, lambda x, y: np.ones_like(x))[0] == pytest.approx(5.0)
    assert integrate_edge(gauss_edge(), a, b, lambda x, y: x)[0] == pytest.approx(7.5)


def test_default_rule_is_degree_six():
    assert default_rule().exact_degree >= 6


def test_closed_form_examples():
    V = np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
    A = np.array([0.5])
    one = integrate_triangle(dunavant(6), V, A, lambda x, y: np.ones_like(x))
    assert one[0] == pytest.approx(0.5, rel=1e-14)
    bubble = integrate_triangle(dunavant(6), V, A, lambda x, y: (1 - x - y) * x * y)
    assert bubble[0] == pytest.approx(1 / 120, rel=1e-13)


def test_sine_over_square_mesh():
    from eigx.mesh import build_level

    g = build_level("square2", 6).geometry
    vals = integrate_triangle(dunavant(6), g.vertices, g.area, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    assert vals.sum() == pytest.approx(4 / np.pi**2, abs=1e-8)


def test_edge_examples():
    assert gauss_edge(3).weights @ gauss_edge(3).points ** 5 == pytest.approx(1 / 6, rel=1e-14)
    a, b = np.array([[0.2, 0.1]]), np.array([[1.1, 0.7]])
    L = np.linalg.norm(b - a)
    assert integrate_edge(gauss_edge(), a, b, lambda x, y: 3.0 + 0 * x)[0] == pytest.approx(3 * L)
    # psi of the start vertex runs linearly from 1 to 0 along the edge
    psi = lambda x, y: 1 - (x - a[0, 0]) / (b[0, 0] - a[0, 0])  # noqa: E731
    assert integrate_edge(gauss_edge(), a, b, lambda x, y: (psi(x, y) - 0.5) ** 2)[0] == pytest.approx(L / 12)
