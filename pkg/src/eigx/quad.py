"""Fixed-order quadrature on triangles and edges.

Triangle rules are stored in barycentric coordinates with weights that sum
to one, so ``|K| * sum(w * f(x_q))`` integrates over a physical triangle.
The symmetric Dunavant rules are tabulated to 15 digits in the literature;
they are polished here against the monomial moment equations so that every
shipped rule is exact to rounding at its declared degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.optimize import least_squares
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class TriangleRule:
    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,), sum to 1
    exact_degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class EdgeRule:
    points: np.ndarray  # (nq,) in [0, 1]
    weights: np.ndarray  # (nq,), sum to 1
    exact_degree: int


def reference_moment(a: int, b: int, c: int = 0) -> float:
    """Mean of psi1^a psi2^b psi3^c over a triangle."""
    return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)


# Orbit tables: ("s3", w) | ("s21", a, w) | ("s111", a, b, w)
_DUNAVANT = {
    2: [("s21", 1.0 / 6.0, 1.0 / 3.0)],
    4: [
        ("s21", 0.445948490915965, 0.223381589678011),
        ("s21", 0.091576213509771, 0.109951743655322),
    ],
    6: [
        ("s21", 0.249286745170910, 0.116786275726379),
        ("s21", 0.063089014491502, 0.050844906370207),
        ("s111", 0.310352451033785, 0.053145049844816, 0.082851075618374),
    ],
}


def _expand(orbits):
    pts, wts = [], []
    for orb in orbits:
        kind = orb[0]
        if kind == "s3":
            pts.append((1 / 3, 1 / 3, 1 / 3))
            wts.append(orb[1])
        elif kind == "s21":
            a, w = orb[1], orb[2]
            c = 1.0 - 2.0 * a
            for p in ((a, a, c), (a, c, a), (c, a, a)):
                pts.append(p)
                wts.append(w)
        else:
            a, b, w = orb[1], orb[2], orb[3]
            c = 1.0 - a - b
            for p in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
                pts.append(p)
                wts.append(w)
    return np.array(pts), np.array(wts)


def _moment_residual(orbits, degree):
    pts, wts = _expand(orbits)
    res = []
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            res.append(np.dot(wts, pts[:, 0] ** a * pts[:, 1] ** b) - reference_moment(a, b))
    return np.array(res)


def _polish(orbits, degree):
    shapes = [len(o) - 1 for o in orbits]
    x0 = np.concatenate([o[1:] for o in orbits])

    def unpack(x):
        out, k = [], 0
        for orb, n in zip(orbits, shapes):
            out.append((orb[0], *x[k:k + n]))
            k += n
        return out

    sol = least_squares(
        lambda x: _moment_residual(unpack(x), degree), x0,
        method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
    )
    return unpack(sol.x)


@lru_cache(maxsize=None)
def dunavant(degree: int) -> TriangleRule:
    """Symmetric rule of exact degree 2, 4 or 6 (3, 6 and 12 points)."""
    if degree not in _DUNAVANT:
        raise ValueError(f"no Dunavant rule of degree {degree}; choose 2, 4 or 6")
    orbits = _DUNAVANT[degree]
    if degree > 2:
        orbits = _polish(orbits, degree)
    pts, wts = _expand(orbits)
    return TriangleRule(pts, wts, degree)


@lru_cache(maxsize=None)
def collapsed_gauss(n: int) -> TriangleRule:
    """Conical product rule with n*n points, exact to degree 2n-1."""
    # u carries the (1 - u) Jacobian of the collapse, handled by Gauss-Jacobi(1, 0)
    tu, wu = roots_jacobi(n, 1.0, 0.0)
    tv, wv = np.polynomial.legendre.leggauss(n)
    u = (tu + 1.0) / 2.0
    v = (tv + 1.0) / 2.0
    wu = wu / wu.sum()
    wv = wv / wv.sum()
    U, V = np.meshgrid(u, v, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = np.outer(wu, wv).ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    return TriangleRule(pts, w, 2 * n - 1)


@lru_cache(maxsize=None)
def gauss_edge(n: int = 5) -> EdgeRule:
    t, w = np.polynomial.legendre.leggauss(n)
    return EdgeRule((t + 1.0) / 2.0, w / 2.0, 2 * n - 1)


def default_rule() -> TriangleRule:
    return dunavant(6)


def accurate_rule() -> TriangleRule:
    """High-degree rule for error norms of smooth non-polynomial fields."""
    return collapsed_gauss(8)


def physical_points(vertices: np.ndarray, rule: TriangleRule) -> np.ndarray:
    """Map rule points onto triangles.

    vertices: (M, 3, 2) -> (M, nq, 2)
    """
    return np.einsum("qk,mkd->mqd", rule.points, vertices)


def integrate_triangle(rule: TriangleRule, vertices, areas, f) -> np.ndarray:
    """Integrate ``f(x, y)`` over each triangle.

    ``f`` receives arrays of shape (M, nq) and returns (M, nq) for scalar
    fields or (M, nq, d) for vector fields. Returns (M,) or (M, d).
    """
    vertices = np.asarray(vertices, dtype=float)
    single = vertices.ndim == 2
    if single:
        vertices = vertices[None]
        areas = np.atleast_1d(areas)
    x = physical_points(vertices, rule)
    vals = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
    if vals.ndim == 0:
        vals = np.full(x.shape[:2], float(vals))
    out = np.einsum("q,mq...->m...", rule.weights, vals) * np.reshape(
        areas, (-1,) + (1,) * (vals.ndim - 2)
    )
    return out[0] if single else out


def integrate_edge(rule: EdgeRule, a, b, f) -> np.ndarray:
    """Integrate ``f(x, y)`` along segments from ``a`` to ``b`` (each (E, 2) or (2,))."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    single = a.ndim == 1
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    length = np.linalg.norm(b - a, axis=1)
    x = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
    if vals.ndim == 0:
        vals = np.full(x.shape[:2], float(vals))
    out = np.einsum("q,eq...->e...", rule.weights, vals) * np.reshape(
        length, (-1,) + (1,) * (vals.ndim - 2)
    )
    return out[0] if single else out
