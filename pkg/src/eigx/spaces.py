"""Finite element spaces, local bases, interpolation operators and bubbles.

Supported kinds: ``CR`` (edge means), ``ECR`` (edge means plus element mean),
``RT0`` (edge fluxes w.r.t. the global edge normal), ``P0``, ``P1`` and the
conforming cubic Lagrange space ``P3`` used for reference eigenvalues.

Local bases on a triangle with barycentric coordinates psi_i:

* CR:  1 - 2 psi_i  (value 1 on edge i, 0 on the other two edge means)
* ECR: (1 - 2 psi_i) - phi/3 for the edges and phi for the element mean,
       with phi = 2 - 36/H^2 |x - M|^2 and H^2 the sum of squared edge lengths
* RT0: s_i (x - p_i) / (2|K|), s_i = +-1 the edge orientation sign
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mesh import Mesh
from .quad import TriangleRule, accurate_rule, gauss_edge, integrate_triangle, physical_points

KINDS = ("CR", "ECR", "RT0", "P0", "P1", "P3")

_NEXT = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])


@dataclass(frozen=True)
class AnalyticField:
    """Callable field with optional exact derivatives.

    ``value(x, y)`` is vectorized; it returns shape ``x.shape`` for scalar
    fields and ``x.shape + (2,)`` for vector fields.  ``grad`` returns
    ``x.shape + (2,)``, ``hess`` returns ``x.shape + (2, 2)`` and ``div``
    (vector fields) returns ``x.shape``.
    """

    value: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    div: Optional[Callable] = None

    def __call__(self, x, y):
        return self.value(x, y)

    def require(self, what: str) -> Callable:
        fn = getattr(self, what)
        if fn is None:
            raise ValueError(f"operation needs the analytic {what} of the field, which was not supplied")
        return fn

    def gradient_field(self) -> "AnalyticField":
        """The vector field grad(v), with divergence from the Hessian trace if known."""
        g = self.require("grad")
        div = None
        if self.hess is not None:
            H = self.hess
            div = lambda x, y: np.trace(H(x, y), axis1=-2, axis2=-1)
        return AnalyticField(g, grad=self.hess, div=div)


def sine_mode(m: int = 1, n: int = 1, scale: float = 2.0) -> AnalyticField:
    """scale * sin(m pi x) sin(n pi y); scale 2 gives unit L2 norm on (0,1)^2."""
    a, b = m * np.pi, n * np.pi

    def value(x, y):
        return scale * np.sin(a * x) * np.sin(b * y)

    def grad(x, y):
        return scale * np.stack(
            [a * np.cos(a * x) * np.sin(b * y), b * np.sin(a * x) * np.cos(b * y)], axis=-1
        )

    def hess(x, y):
        sxy = np.sin(a * x) * np.sin(b * y)
        cxy = np.cos(a * x) * np.cos(b * y)
        h11 = -a * a * sxy
        h22 = -b * b * sxy
        h12 = a * b * cxy
        return scale * np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)

    return AnalyticField(value, grad, hess)


def quadratic_field(c) -> AnalyticField:
    """c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2 with exact derivatives."""
    c = np.asarray(c, dtype=float)

    def value(x, y):
        return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y

    def grad(x, y):
        return np.stack([c[1] + 2 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2 * c[5] * y], -1)

    def hess(x, y):
        H = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
        return np.broadcast_to(H, np.shape(x) + (2, 2)).copy()

    return AnalyticField(value, grad, hess)


class FeSpace:
    """Global DOF numbering of one element kind on a mesh.

    ``dirichlet_mask`` flags DOFs attached to edges (or their nodes) whose
    tag is in ``dirichlet_tags``.  For RT0 these are the flux DOFs fixed to
    zero, so pass the Neumann-type tags there.
    """

    def __init__(self, mesh: Mesh, kind: str, dirichlet_tags=None):
        if kind not in KINDS:
            raise ValueError(f"unknown space kind {kind!r}; choose from {KINDS}")
        if dirichlet_tags is None:
            dirichlet_tags = ("neumann",) if kind == "RT0" else ("dirichlet",)
        self.mesh = mesh
        self.kind = kind
        self.dirichlet_tags = tuple(dirichlet_tags)
        bc_edges = mesh.edges_with_tags(self.dirichlet_tags)
        M, E, N = mesh.n_triangles, mesh.n_edges, mesh.n_vertices
        mask_edge = np.zeros(E, dtype=bool)
        mask_edge[bc_edges] = True

        if kind in ("CR", "RT0"):
            self.local_dofs = mesh.tri_edges.copy()
            self.n_dofs = E
            mask = mask_edge
        elif kind == "ECR":
            self.local_dofs = np.hstack([mesh.tri_edges, E + np.arange(M)[:, None]])
            self.n_dofs = E + M
            mask = np.concatenate([mask_edge, np.zeros(M, dtype=bool)])
        elif kind == "P0":
            self.local_dofs = np.arange(M)[:, None]
            self.n_dofs = M
            mask = np.zeros(M, dtype=bool)
        elif kind == "P1":
            self.local_dofs = mesh.triangles.copy()
            self.n_dofs = N
            mask = np.zeros(N, dtype=bool)
            mask[mesh.edges[bc_edges].ravel()] = True
        else:  # P3
            self.local_dofs = self._p3_dofs()
            self.n_dofs = N + 2 * E + M
            mask = np.zeros(self.n_dofs, dtype=bool)
            mask[mesh.edges[bc_edges].ravel()] = True
            mask[N + 2 * bc_edges] = True
            mask[N + 2 * bc_edges + 1] = True
        self.dirichlet_mask = mask
        self.dirichlet_mask.setflags(write=False)
        self.local_dofs.setflags(write=False)

    def __repr__(self):
        return f"FeSpace({self.kind}, n_dofs={self.n_dofs}, level={self.mesh.level})"

    @property
    def n_local(self) -> int:
        return self.local_dofs.shape[1]

    @property
    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet_mask)

    @property
    def local_sign(self) -> np.ndarray:
        if self.kind == "RT0":
            return self.mesh.tri_edge_sign
        return np.ones(self.local_dofs.shape)

    def _p3_dofs(self) -> np.ndarray:
        mesh = self.mesh
        N, E, M = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
        te = mesh.tri_edges
        start = mesh.triangles[:, _NEXT]  # first vertex of local edge i
        forward = start == mesh.edges[te, 0]
        n0 = N + 2 * te + np.where(forward, 0, 1)  # node at 1/3 from start
        n1 = N + 2 * te + np.where(forward, 1, 0)
        edge_nodes = np.stack([n0, n1], axis=2).reshape(M, 6)
        return np.hstack([mesh.triangles, edge_nodes, N + 2 * E + np.arange(M)[:, None]])

    # -- local bases -----------------------------------------------------
    def local_basis(self, bary, elements=None):
        """Basis values and gradients at barycentric points.

        Returns ``(values, grads)`` with shapes (m, nq, nloc) and
        (m, nq, nloc, 2); for RT0 values are vectors (m, nq, nloc, 2) and
        ``grads`` is replaced by the (m, nloc) divergences.  Signs of RT0
        functions follow the global edge orientation.
        """
        bary = np.atleast_2d(np.asarray(bary, dtype=float))
        g = self.mesh.geometry
        el = slice(None) if elements is None else np.atleast_1d(elements)
        G = g.grad_bary[el]  # (m, 3, 2)
        m = G.shape[0]
        nq = bary.shape[0]
        kind = self.kind
        if kind == "P0":
            return np.ones((m, nq, 1)), np.zeros((m, nq, 1, 2))
        if kind == "P1":
            return np.broadcast_to(bary, (m, nq, 3)).copy(), np.broadcast_to(G[:, None], (m, nq, 3, 2)).copy()
        if kind == "CR":
            vals = np.broadcast_to(1.0 - 2.0 * bary, (m, nq, 3)).copy()
            return vals, np.broadcast_to(-2.0 * G[:, None], (m, nq, 3, 2)).copy()
        if kind == "ECR":
            x = np.einsum("qk,mkd->mqd", bary, g.vertices[el])
            r = x - g.centroid[el][:, None, :]
            H2 = g.H2[el][:, None]
            phi = 2.0 - 36.0 / H2 * (r**2).sum(axis=2)
            dphi = -72.0 / H2[..., None] * r
            vals = np.empty((m, nq, 4))
            grads = np.empty((m, nq, 4, 2))
            vals[..., :3] = (1.0 - 2.0 * bary)[None] - phi[..., None] / 3.0
            grads[..., :3, :] = -2.0 * G[:, None] - dphi[:, :, None, :] / 3.0
            vals[..., 3] = phi
            grads[..., 3, :] = dphi
            return vals, grads
        if kind == "RT0":
            x = np.einsum("qk,mkd->mqd", bary, g.vertices[el])
            s = self.local_sign[el]
            area = g.area[el]
            vals = (x[:, :, None, :] - g.vertices[el][:, None, :, :]) * (
                s / (2.0 * area[:, None])
            )[:, None, :, None]
            return vals, s / area[:, None]
        return _p3_basis(bary, G)

    # -- helpers ---------------------------------------------------------
    def function(self, coeffs=None) -> "FeFunction":
        if coeffs is None:
            coeffs = np.zeros(self.n_dofs)
        return FeFunction(self, coeffs)

    def basis_function(self, dof: int) -> "FeFunction":
        c = np.zeros(self.n_dofs)
        c[dof] = 1.0
        return FeFunction(self, c)

    def node_coordinates(self) -> np.ndarray:
        """Physical locations of Lagrange nodes (P1 and P3 only)."""
        mesh = self.mesh
        if self.kind == "P1":
            return mesh.vertices.copy()
        if self.kind != "P3":
            raise ValueError("node coordinates exist for P1 and P3 only")
        a = mesh.vertices[mesh.edges[:, 0]]
        b = mesh.vertices[mesh.edges[:, 1]]
        edge_nodes = np.stack([(2 * a + b) / 3, (a + 2 * b) / 3], axis=1).reshape(-1, 2)
        return np.vstack([mesh.vertices, edge_nodes, mesh.geometry.centroid])


def _p3_basis(bary, G):
    """Cubic Lagrange basis: 3 vertices, 2 nodes per local edge, 1 interior."""
    m = G.shape[0]
    nq = bary.shape[0]
    psi = bary
    vals = np.empty((nq, 10))
    dpsi = np.zeros((nq, 10, 3))  # derivatives w.r.t. each barycentric coordinate
    for i in range(3):
        p = psi[:, i]
        vals[:, i] = 0.5 * p * (3 * p - 1) * (3 * p - 2)
        dpsi[:, i, i] = 0.5 * (27 * p * p - 18 * p + 2)
    for i in range(3):
        a, b = _NEXT[i], _PREV[i]
        pa, pb = psi[:, a], psi[:, b]
        for j, (u, w, iu, iw) in enumerate(((pa, pb, a, b), (pb, pa, b, a))):
            col = 3 + 2 * i + j
            vals[:, col] = 4.5 * u * w * (3 * u - 1)
            dpsi[:, col, iu] = 4.5 * w * (6 * u - 1)
            dpsi[:, col, iw] = 4.5 * u * (3 * u - 1)
    vals[:, 9] = 27 * psi[:, 0] * psi[:, 1] * psi[:, 2]
    dpsi[:, 9, 0] = 27 * psi[:, 1] * psi[:, 2]
    dpsi[:, 9, 1] = 27 * psi[:, 0] * psi[:, 2]
    dpsi[:, 9, 2] = 27 * psi[:, 0] * psi[:, 1]
    grads = np.einsum("qjk,mkd->mqjd", dpsi, G)
    return np.broadcast_to(vals, (m, nq, 10)).copy(), grads


class FeFunction:
    """Coefficient vector attached to a space; immutable after construction."""

    def __init__(self, space: FeSpace, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (space.n_dofs,):
            raise ValueError(f"expected {space.n_dofs} coefficients, got {coeffs.shape}")
        coeffs.setflags(write=False)
        self.space = space
        self.coeffs = coeffs

    def __repr__(self):
        return f"FeFunction({self.space.kind}, n_dofs={self.space.n_dofs})"

    @property
    def local_coeffs(self) -> np.ndarray:
        return self.coeffs[self.space.local_dofs]

    def values_at(self, bary, elements=None) -> np.ndarray:
        """Values at barycentric points on every (or selected) element."""
        vals, _ = self.space.local_basis(bary, elements)
        c = self.local_coeffs if elements is None else self.local_coeffs[np.atleast_1d(elements)]
        if self.space.kind == "RT0":
            return np.einsum("mqjd,mj->mqd", vals, c)
        return np.einsum("mqj,mj->mq", vals, c)

    def grads_at(self, bary, elements=None) -> np.ndarray:
        """Piecewise gradients (m, nq, 2); RT0 has no gradient here."""
        if self.space.kind == "RT0":
            raise ValueError("RT0 functions expose values and divergence only")
        _, grads = self.space.local_basis(bary, elements)
        c = self.local_coeffs if elements is None else self.local_coeffs[np.atleast_1d(elements)]
        return np.einsum("mqjd,mj->mqd", grads, c)

    def divergence(self) -> np.ndarray:
        """Elementwise divergence of an RT0 function, shape (M,)."""
        if self.space.kind != "RT0":
            raise ValueError("divergence is available for RT0 only")
        _, div = self.space.local_basis(np.array([[1 / 3, 1 / 3, 1 / 3]]))
        return (div * self.local_coeffs).sum(axis=1)

    # -- point evaluation --------------------------------------------------
    def _bary(self, tri: int, point, tol: float = 1e-12):
        lam = self.space.mesh.geometry.barycentric(tri, point)
        if np.any(lam < -tol) or np.any(lam > 1 + tol):
            raise ValueError(f"point {tuple(np.asarray(point))} is outside triangle {tri}")
        return lam[None]

    def eval(self, tri: int, point):
        out = self.values_at(self._bary(tri, point), elements=tri)[0, 0]
        return out if np.ndim(out) else float(out)

    def grad_eval(self, tri: int, point) -> np.ndarray:
        return self.grads_at(self._bary(tri, point), elements=tri)[0, 0]

    def div_eval(self, tri: int, point) -> float:
        self._bary(tri, point)
        return float(self.divergence()[tri])

    # -- diagnostics ---------------------------------------------------------
    def edge_jump_integrals(self, n_gauss: int = 4) -> np.ndarray:
        """Integral of the jump across every interior edge (scalar spaces)."""
        mesh = self.space.mesh
        rule = gauss_edge(n_gauss)
        ie = mesh.interior_edges
        out = np.zeros(len(ie))
        ends = mesh.vertices[mesh.edges[ie]]
        for side, sgn in ((0, 1.0), (1, -1.0)):
            K = mesh.edge_tris[ie, side]
            lam = _bary_many(mesh, K, ends, rule.points)
            vals = np.stack(
                [self._values_elementwise(lam[:, q], K) for q in range(len(rule.points))], axis=1
            )
            out += sgn * (vals * rule.weights).sum(axis=1) * mesh.edge_lengths[ie]
        return out

    def _values_elementwise(self, lam: np.ndarray, K: np.ndarray) -> np.ndarray:
        """Values at one barycentric point per listed element."""
        space = self.space
        g = space.mesh.geometry
        c = self.local_coeffs[K]
        if space.kind == "CR":
            return ((1.0 - 2.0 * lam) * c).sum(axis=1)
        if space.kind == "ECR":
            x = np.einsum("mk,mkd->md", lam, g.vertices[K])
            r = x - g.centroid[K]
            phi = 2.0 - 36.0 / g.H2[K] * (r**2).sum(axis=1)
            base = (1.0 - 2.0 * lam) - phi[:, None] / 3.0
            return (base * c[:, :3]).sum(axis=1) + phi * c[:, 3]
        if space.kind == "P1":
            return (lam * c).sum(axis=1)
        if space.kind == "P0":
            return c[:, 0]
        out = np.empty(len(K))
        for j, k in enumerate(K):
            out[j] = self.values_at(lam[j][None], elements=k)[0, 0]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dof_index", "value"])
            for i, v in enumerate(self.coeffs):
                w.writerow([i, repr(float(v))])


def _bary_many(mesh: Mesh, K, ends, ts) -> np.ndarray:
    """Barycentric coordinates in element K[j] of points along segment ends[j]."""
    g = mesh.geometry
    G = g.grad_bary[K]
    p0 = g.vertices[K, 0]
    out = np.empty((len(K), len(ts), 3))
    for q, t in enumerate(ts):
        x = (1 - t) * ends[:, 0] + t * ends[:, 1]
        l12 = np.einsum("md,mkd->mk", x - p0, G[:, 1:])
        out[:, q, 1:] = l12
        out[:, q, 0] = 1.0 - l12.sum(axis=1)
    return out


# -- interpolation ------------------------------------------------------------
def _space(arg, kind: str) -> FeSpace:
    if isinstance(arg, FeSpace):
        if arg.kind != kind:
            raise ValueError(f"expected a {kind} space, got {arg.kind}")
        return arg
    return FeSpace(arg, kind)


def edge_means(v: Callable, mesh: Mesh, n_gauss: int = 5) -> np.ndarray:
    rule = gauss_edge(n_gauss)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    x = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    return np.asarray(v(x[..., 0], x[..., 1])) @ rule.weights


def element_means(v: Callable, mesh: Mesh, rule: TriangleRule | None = None) -> np.ndarray:
    g = mesh.geometry
    rule = accurate_rule() if rule is None else rule
    total = integrate_triangle(rule, g.vertices, g.area, v)
    return total / g.area.reshape((-1,) + (1,) * (total.ndim - 1))


def interp_cr(v: Callable, mesh_or_space) -> FeFunction:
    """Canonical CR interpolant: the DOF of edge e is the mean of v over e."""
    space = _space(mesh_or_space, "CR")
    return FeFunction(space, edge_means(v, space.mesh))


def interp_ecr(v: Callable, mesh_or_space, rule: TriangleRule | None = None) -> FeFunction:
    """Canonical ECR interpolant: edge means and element means of v."""
    space = _space(mesh_or_space, "ECR")
    mesh = space.mesh
    return FeFunction(space, np.concatenate([edge_means(v, mesh), element_means(v, mesh, rule)]))


def interp_rt(q: Callable, mesh_or_space, n_gauss: int = 5) -> FeFunction:
    """Fortin interpolant: flux of q through each edge along the global normal."""
    space = _space(mesh_or_space, "RT0")
    mesh = space.mesh
    rule = gauss_edge(n_gauss)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    x = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    qn = np.einsum("eqd,ed->eq", np.asarray(q(x[..., 0], x[..., 1])), mesh.edge_normals)
    return FeFunction(space, (qn @ rule.weights) * mesh.edge_lengths)


def project_p0(v: Callable, mesh_or_space, rule: TriangleRule | None = None) -> FeFunction:
    space = _space(mesh_or_space, "P0")
    return FeFunction(space, element_means(v, space.mesh, rule))


def interp_p1(v: Callable, mesh_or_space) -> FeFunction:
    space = _space(mesh_or_space, "P1")
    X = space.mesh.vertices
    return FeFunction(space, np.asarray(v(X[:, 0], X[:, 1]), dtype=float))


def interp_p3(v: Callable, mesh_or_space) -> FeFunction:
    space = _space(mesh_or_space, "P3")
    X = space.node_coordinates()
    return FeFunction(space, np.asarray(v(X[:, 0], X[:, 1]), dtype=float))


# -- bubbles ------------------------------------------------------------------
class BubbleSet:
    """Per-element bubble functions used in the error expansions.

    ``cr(k, i, x)``  phi_CR^i = (2psi_{i-1}-1)(2psi_{i+1}-1) - 2/3 psi_i + 1/3
    ``ecr(k, x)``    phi_ECR = 2 - 36/H^2 |x - M|^2
    ``ecr1(k, x)``   (x1 - M1)^2 - (x2 - M2)^2
    ``ecr2(k, x)``   (x1 - M1)(x2 - M2)

    All accept a point array of shape (..., 2) in physical coordinates.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.geometry = mesh.geometry

    def _psi(self, k, x):
        return self.geometry.barycentric(k, x)

    def cr(self, k: int, i: int, x) -> np.ndarray:
        psi = self._psi(k, x)
        return (
            (2 * psi[..., _PREV[i]] - 1) * (2 * psi[..., _NEXT[i]] - 1)
            - 2.0 / 3.0 * psi[..., i]
            + 1.0 / 3.0
        )

    def ecr(self, k: int, x) -> np.ndarray:
        r = np.asarray(x, dtype=float) - self.geometry.centroid[k]
        return 2.0 - 36.0 / self.geometry.H2[k] * (r**2).sum(axis=-1)

    def ecr1(self, k: int, x) -> np.ndarray:
        r = np.asarray(x, dtype=float) - self.geometry.centroid[k]
        return r[..., 0] ** 2 - r[..., 1] ** 2

    def ecr2(self, k: int, x) -> np.ndarray:
        r = np.asarray(x, dtype=float) - self.geometry.centroid[k]
        return r[..., 0] * r[..., 1]

    def cr_tangent_second(self, k: int, i: int, j: int) -> float:
        """d^2 phi_CR^i / dt_j^2 (constant on K)."""
        t = self.geometry.tangents[k, j]
        G = self.geometry.grad_bary[k]
        a, b = _PREV[i], _NEXT[i]
        return float(8.0 * (G[a] @ t) * (G[b] @ t))

    def ecr_tangent_second(self, k: int, j: int) -> float:
        return -72.0 / float(self.geometry.H2[k])


def cr_interp_error_quadratic(mesh: Mesh, hess: np.ndarray, bary) -> np.ndarray:
    """(I - Pi_CR) w at barycentric points for a quadratic w with Hessian ``hess``.

    Uses -(1/8) sum_i |e_i|^2 d^2w/dt_i^2 phi_CR^i.  Returns (M, nq).
    """
    g = mesh.geometry
    bary = np.atleast_2d(bary)
    d2 = np.einsum("mid,de,mie->mi", g.tangents, hess, g.tangents)
    coef = -0.125 * g.edge_lengths**2 * d2  # (M, 3)
    phis = np.stack(
        [
            (2 * bary[:, _PREV[i]] - 1) * (2 * bary[:, _NEXT[i]] - 1) - 2.0 / 3.0 * bary[:, i] + 1.0 / 3.0
            for i in range(3)
        ],
        axis=1,
    )  # (nq, 3)
    return coef @ phis.T


def field_at_rule(v: Callable, mesh: Mesh, rule: TriangleRule) -> np.ndarray:
    x = physical_points(mesh.geometry.vertices, rule)
    return np.asarray(v(x[..., 0], x[..., 1]))
