"""Error expansions, identities and extrapolation for CR/ECR eigenvalues.

The quantities here compare the discrete eigenpair with three auxiliary
discrete source problems that share the load f = Pi0(lam u):

* the mixed RT0-P0 flux ``sigma``,
* the CR solution ``u_CR^f`` and the ECR solution ``u_ECR^f``.

All volume integrals of smooth fields use the degree-15 collapsed Gauss
rule, so quadrature error stays far below the h^4 terms being measured.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import (
    CoefficientField,
    apply_dirichlet,
    assemble_mass,
    assemble_mixed_rt,
    assemble_p0_load,
    assemble_stiffness,
)
from .mesh import Mesh, check_uniformity
from .quad import TriangleRule, accurate_rule, dunavant, physical_points
from .solve import solve_eigs_smallest, solve_sym_linear
from .spaces import (
    AnalyticField,
    FeFunction,
    FeSpace,
    interp_cr,
    interp_ecr,
    interp_rt,
    project_p0,
)


class ExtrapolationError(ValueError):
    """Degenerate input to an extrapolation formula."""


# -- gamma constants ------------------------------------------------------------
@dataclass(frozen=True)
class GammaConstants:
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    h: float

    def is_constant(self, rtol: float = 1e-12) -> bool:
        scale = max(np.abs(self.g11).max(), np.abs(self.g22).max(), 1e-300)
        return all(np.ptp(g) <= rtol * scale for g in (self.g11, self.g12, self.g22))

    def mean(self) -> tuple[float, float, float]:
        return float(self.g11.mean()), float(self.g12.mean()), float(self.g22.mean())


def _rt_local_coeffs(g, phi_at_mid: np.ndarray) -> np.ndarray:
    """a_j = |e_j|/(2|K|) phi(m_j).n_j for a linear field sampled at midpoints."""
    return g.edge_lengths / (2.0 * g.area[:, None]) * np.einsum("mjd,mjd->mj", phi_at_mid, g.normals)


def _phi_rt(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi^1 = (r1, -r2), phi^2 = (r2, r1) for offsets r = x - M_K."""
    return np.stack([r[..., 0], -r[..., 1]], -1), np.stack([r[..., 1], r[..., 0]], -1)


def gamma_constants(mesh: Mesh, rule: TriangleRule | None = None) -> GammaConstants:
    """gamma^{ij} = 1/(h^2|K|) int_K (I - Pi_RT)phi^i . (I - Pi_RT)phi^j per element.

    h is the largest element diameter of the mesh.
    """
    rule = dunavant(4) if rule is None else rule
    g = mesh.geometry
    M = g.centroid[:, None, :]
    X = physical_points(g.vertices, rule)  # (M, nq, 2)
    errs = []
    for phi_mid, phi_x in zip(_phi_rt(g.midpoints - M), _phi_rt(X - M)):
        a = _rt_local_coeffs(g, phi_mid)  # (M, 3)
        proj = np.einsum("mj,mqjd->mqd", a, X[:, :, None, :] - g.vertices[:, None, :, :])
        errs.append(phi_x - proj)
    h = mesh.h

    def gam(e1, e2):
        return np.einsum("q,mqd,mqd->m", rule.weights, e1, e2) / h**2

    return GammaConstants(gam(errs[0], errs[0]), gam(errs[0], errs[1]), gam(errs[1], errs[1]), h)


def rt_error_quadratic(hess, mesh: Mesh, gamma: GammaConstants | None = None) -> np.ndarray:
    """Per-element ||(I - Pi_RT) grad w||^2 for a quadratic w with Hessian ``hess``.

    Evaluates h^2 |K| (g11/4 (w11 - w22)^2 + g22 w12^2 + g12 (w11 - w22) w12).
    """
    H = np.asarray(hess, dtype=float)
    if H.shape != (2, 2):
        raise ValueError("a quadratic is described by its constant 2x2 Hessian")
    gamma = gamma_constants(mesh) if gamma is None else gamma
    d = H[0, 0] - H[1, 1]
    c = H[0, 1]
    return gamma.h**2 * mesh.geometry.area * (gamma.g11 / 4 * d * d + gamma.g22 * c * c + gamma.g12 * d * c)


def rt_error_direct(grad: AnalyticField | callable, mesh: Mesh, rule: TriangleRule | None = None) -> np.ndarray:
    """Per-element ||q - Pi_RT q||^2 by quadrature."""
    rule = accurate_rule() if rule is None else rule
    g = mesh.geometry
    X = physical_points(g.vertices, rule)
    q = np.asarray(grad(X[..., 0], X[..., 1]))
    pq = interp_rt(grad, mesh).values_at(rule.points)
    return np.einsum("q,mqd->m", rule.weights, (q - pq) ** 2) * g.area


@dataclass(frozen=True)
class RtErrorField:
    direct: float
    expansion: float

    @property
    def difference(self) -> float:
        return abs(self.direct - self.expansion)


def hessian_integrals(u: AnalyticField, mesh: Mesh, rule: TriangleRule | None = None) -> np.ndarray:
    """Per element: [int (u11-u22)^2, int u12^2, int (u11-u22) u12]."""
    rule = accurate_rule() if rule is None else rule
    hess = u.require("hess")
    g = mesh.geometry
    X = physical_points(g.vertices, rule)
    H = hess(X[..., 0], X[..., 1])
    d = H[..., 0, 0] - H[..., 1, 1]
    c = H[..., 0, 1]
    w = rule.weights
    return np.stack([(d * d) @ w, (c * c) @ w, (d * c) @ w], axis=1) * g.area[:, None]


def gamma_expansion(u: AnalyticField, mesh: Mesh, gamma: GammaConstants | None = None) -> float:
    """h^2 (g11/4 ||u11-u22||^2 + g22 ||u12||^2 + g12 int (u11-u22) u12), elementwise gammas."""
    gamma = gamma_constants(mesh) if gamma is None else gamma
    I = hessian_integrals(u, mesh)
    return float(gamma.h**2 * (gamma.g11 / 4 * I[:, 0] + gamma.g22 * I[:, 1] + gamma.g12 * I[:, 2]).sum())


def rt_error_field(u: AnalyticField, mesh: Mesh) -> RtErrorField:
    """||(I - Pi_RT) grad u||^2 on the whole mesh, direct and via the gamma expansion."""
    u.require("hess")
    direct = float(rt_error_direct(u.require("grad"), mesh).sum())
    return RtErrorField(direct, gamma_expansion(u, mesh))


# -- discrete problems -------------------------------------------------------------
def _tags(mesh: Mesh, dirichlet_tags):
    return ("dirichlet",) if dirichlet_tags is None else tuple(dirichlet_tags)


def source_solution(mesh: Mesh, kind: str, load: FeFunction, dirichlet_tags=None,
                    A: CoefficientField | None = None) -> FeFunction:
    """Nonconforming solution of a_h(w, v) = (f, v) for a P0 load f."""
    space = FeSpace(mesh, kind, _tags(mesh, dirichlet_tags))
    K = apply_dirichlet(space, assemble_stiffness(space, A))
    b = K.restrict(assemble_p0_load(space, load))
    return FeFunction(space, K.scatter(solve_sym_linear(K.matrix, b)))


def mixed_solution(mesh: Mesh, load: FeFunction, dirichlet_tags=None) -> tuple[FeFunction, FeFunction]:
    """RT0 flux and P0 potential; flux is constrained on the non-Dirichlet boundary."""
    dtags = set(_tags(mesh, dirichlet_tags))
    bnd = {str(t) for t in np.unique(mesh.edge_tags[mesh.boundary_edges])}
    flux_zero = tuple(sorted(bnd - dtags))
    ms = assemble_mixed_rt(mesh, load, flux_zero_tags=flux_zero)
    return ms.split(solve_sym_linear(ms.matrix, ms.rhs, definite=False))


@dataclass
class DiscreteEigenpair:
    eigenvalue: float
    function: FeFunction
    residual: float


def discrete_eigenpair(mesh: Mesh, kind: str, index: int = 0, align_with: AnalyticField | None = None,
                       tol: float = 1e-11, seed: int = 0, dirichlet_tags=None,
                       A: CoefficientField | None = None) -> DiscreteEigenpair:
    """``index``-th (0-based) eigenpair, L2-normalized, sign fixed by (u_h, u) > 0."""
    space = FeSpace(mesh, kind, _tags(mesh, dirichlet_tags))
    Ks = apply_dirichlet(space, assemble_stiffness(space, A))
    Ms = apply_dirichlet(space, assemble_mass(space))
    res = solve_eigs_smallest(Ks.matrix, Ms.matrix, index + 1, tol=tol, seed=seed)
    f = FeFunction(space, Ks.scatter(res.eigenvectors[:, index]))
    if align_with is not None and l2_inner(f, align_with) < 0:
        f = FeFunction(space, -f.coeffs)
    return DiscreteEigenpair(float(res.eigenvalues[index]), f, float(res.residuals[index]))


# -- quadrature helpers -------------------------------------------------------------
class _Sampler:
    """Fields evaluated at the accurate rule on every element of a mesh."""

    def __init__(self, mesh: Mesh, rule: TriangleRule | None = None):
        self.mesh = mesh
        self.rule = accurate_rule() if rule is None else rule
        g = mesh.geometry
        self.X = physical_points(g.vertices, self.rule)
        self.w = self.rule.weights[None, :] * g.area[:, None]  # (M, nq)

    def field(self, f) -> np.ndarray:
        if isinstance(f, FeFunction):
            return f.values_at(self.rule.points)
        return np.asarray(f(self.X[..., 0], self.X[..., 1]))

    def grad(self, f) -> np.ndarray:
        if isinstance(f, FeFunction):
            return f.grads_at(self.rule.points)
        return np.asarray(f.require("grad")(self.X[..., 0], self.X[..., 1]))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        if a.ndim == 3:
            return float((self.w * np.einsum("mqd,mqd->mq", a, b)).sum())
        return float((self.w * a * b).sum())

    def per_element(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim == 3:
            return (self.w * np.einsum("mqd,mqd->mq", a, b)).sum(axis=1)
        return (self.w * a * b).sum(axis=1)


def l2_inner(f: FeFunction, u) -> float:
    s = _Sampler(f.space.mesh)
    return s.inner(s.field(f), s.field(u))


# -- Marini relations -------------------------------------------------------------------
@dataclass(frozen=True)
class MariniReport:
    cr_discrepancy: float
    ecr_discrepancy: float
    sigma_max: float

    @property
    def relative(self) -> tuple[float, float]:
        s = self.sigma_max if self.sigma_max > 0 else 1.0
        return self.cr_discrepancy / s, self.ecr_discrepancy / s


def verify_marini(mesh: Mesh, lam: float, u, dirichlet_tags=None) -> MariniReport:
    """Max pointwise gap between the RT0 flux and the CR/ECR reconstructions.

    With f = Pi0(lam u): sigma = grad u_CR^f - (f_K/2)(x - M_K) = grad_h u_ECR^f.
    """
    load = project_p0(lambda x, y: lam * np.asarray(u(x, y)), mesh)
    sigma, _ = mixed_solution(mesh, load, dirichlet_tags)
    ucr = source_solution(mesh, "CR", load, dirichlet_tags)
    uecr = source_solution(mesh, "ECR", load, dirichlet_tags)
    rule = dunavant(6)
    g = mesh.geometry
    X = physical_points(g.vertices, rule)
    s = sigma.values_at(rule.points)
    rec_cr = ucr.grads_at(rule.points) - 0.5 * load.coeffs[:, None, None] * (X - g.centroid[:, None, :])
    rec_ecr = uecr.grads_at(rule.points)
    return MariniReport(
        float(np.abs(s - rec_cr).max()),
        float(np.abs(s - rec_ecr).max()),
        float(np.abs(s).max()),
    )


# -- parallelogram orthogonality ---------------------------------------------------------
def _poly2(c, x, y):
    return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y


def _local_interp_error(P: np.ndarray, wc, which: str, bary: np.ndarray) -> np.ndarray:
    """(w - Pi w) at barycentric points of triangle P for quadratic coefficients wc."""
    X = bary @ P
    w = _poly2(wc, X[:, 0], X[:, 1])
    a = P[[1, 2, 0]]
    b = P[[2, 0, 1]]
    m = 0.5 * (a + b)
    # Simpson is exact for quadratics on a segment
    emean = (_poly2(wc, a[:, 0], a[:, 1]) + 4 * _poly2(wc, m[:, 0], m[:, 1]) + _poly2(wc, b[:, 0], b[:, 1])) / 6
    cr = (1 - 2 * bary) @ emean
    if which == "CR":
        return w - cr
    if which != "ECR":
        raise ValueError("which must be 'CR' or 'ECR'")
    r2 = dunavant(2)
    Xk = r2.points @ P
    kmean = r2.weights @ _poly2(wc, Xk[:, 0], Xk[:, 1])
    M = P.mean(axis=0)
    H2 = float(((a - b) ** 2).sum())
    phi = 2.0 - 36.0 / H2 * ((X - M) ** 2).sum(axis=1)
    return w - (cr - phi * emean.sum() / 3.0 + kmean * phi)


def is_parallelogram(P1: np.ndarray, P2: np.ndarray, rtol: float = 1e-12) -> bool:
    P1 = np.asarray(P1, float)
    P2 = np.asarray(P2, float)
    scale = max(np.ptp(np.vstack([P1, P2]), axis=0).max(), 1e-300)
    shared = [(i, j) for i in range(3) for j in range(3) if np.linalg.norm(P1[i] - P2[j]) <= rtol * scale]
    if len(shared) != 2:
        return False
    i1 = ({0, 1, 2} - {s[0] for s in shared}).pop()
    i2 = ({0, 1, 2} - {s[1] for s in shared}).pop()
    ab = P1[shared[0][0]] + P1[shared[1][0]]
    return bool(np.linalg.norm(P1[i1] + P2[i2] - ab) <= rtol * scale)


def parallelogram_orthogonality(P1, P2, wc, vc, which: str = "CR") -> float:
    """(w - Pi w, v - Pi0 v) over K1 u K2 for quadratic w and linear v.

    ``wc`` = (c0, cx, cy, cxx, cxy, cyy), ``vc`` = (d0, dx, dy).
    """
    P1 = np.asarray(P1, float)
    P2 = np.asarray(P2, float)
    if not is_parallelogram(P1, P2):
        raise ValueError("the two triangles do not form a parallelogram")
    rule = dunavant(4)
    total = 0.0
    for P in (P1, P2):
        X = rule.points @ P
        M = P.mean(axis=0)
        v_err = vc[1] * (X[:, 0] - M[0]) + vc[2] * (X[:, 1] - M[1])
        area = 0.5 * abs((P[1, 0] - P[0, 0]) * (P[2, 1] - P[0, 1]) - (P[1, 1] - P[0, 1]) * (P[2, 0] - P[0, 0]))
        total += area * rule.weights @ (_local_interp_error(P, wc, which, rule.points) * v_err)
    return float(total)


# -- error identity ------------------------------------------------------------------------
@dataclass(frozen=True)
class IdentityReport:
    kind: str
    level: int
    lam_h: float
    lhs: float  # lam - lam_h
    rhs: float
    consistency: float  # a_h(u, u_h) - lam_h (u, u_h)
    commuting: float  # -lam_h (u - Pi u, u_h)

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs) / abs(self.lhs)

    @property
    def commuting_residual(self) -> float:
        return abs(self.consistency - self.commuting) / max(abs(self.consistency), abs(self.lhs))


def error_identity_check(mesh: Mesh, kind: str, lam: float, u: AnalyticField, tol: float = 1e-11,
                         pair: DiscreteEigenpair | None = None) -> IdentityReport:
    """Check lam - lam_h = ||grad_h(u-u_h)||^2 - 2 lam_h (u - Pi u, u_h) - lam_h ||u - u_h||^2."""
    if kind not in ("CR", "ECR"):
        raise ValueError("kind must be CR or ECR")
    pair = discrete_eigenpair(mesh, kind, align_with=u, tol=tol) if pair is None else pair
    uh, lh = pair.function, pair.eigenvalue
    s = _Sampler(mesh)
    Pu = (interp_cr if kind == "CR" else interp_ecr)(u, mesh)
    uv, gu = s.field(u), s.grad(u)
    hv, gh = s.field(uh), s.grad(uh)
    pv = s.field(Pu)
    e_grad = gu - gh
    e_val = uv - hv
    rhs = s.inner(e_grad, e_grad) - 2 * lh * s.inner(uv - pv, hv) - lh * s.inner(e_val, e_val)
    consistency = s.inner(gu, gh) - lh * s.inner(uv, hv)
    commuting = -lh * s.inner(uv - pv, hv)
    return IdentityReport(kind, mesh.level, lh, lam - lh, rhs, consistency, commuting)


# -- term decomposition --------------------------------------------------------------------
@dataclass
class LevelExpansion:
    kind: str
    level: int
    h: float
    H2: float
    lam_h: float
    error: float  # lam - lam_h
    terms: dict
    predicted: float  # leading term of the asymptotic expansion
    uniform: bool

    @property
    def total(self) -> float:
        return float(sum(self.terms.values()))

    @property
    def residual(self) -> float:
        return self.error - self.total

    @property
    def leading_residual(self) -> float:
        return self.error - self.predicted


def decompose_error(mesh: Mesh, lam: float, u: AnalyticField, kind: str = "CR", tol: float = 1e-11) -> LevelExpansion:
    """Split lam - lam_h into the computable terms of the error expansion.

    CR:  ||(I-Pi_RT)grad u||^2 + lam^2/144 sum H_K^2 ||u||_K^2 + I_CR + I_RT + I_CR1 + I_CR2
    ECR: ||(I-Pi_RT)grad u||^2 - 2 lam (u - Pi_ECR u, u - Pi0 u) + I_ECR
    """
    if kind not in ("CR", "ECR"):
        raise ValueError("kind must be CR or ECR")
    u.require("hess")
    g = mesh.geometry
    s = _Sampler(mesh)
    load = project_p0(lambda x, y: lam * np.asarray(u(x, y)), mesh)
    sigma, _ = mixed_solution(mesh, load)
    pair = discrete_eigenpair(mesh, kind, align_with=u, tol=tol)
    uv, gu = s.field(u), s.grad(u)
    prt = interp_rt(u.require("grad"), mesh).values_at(s.rule.points)
    sv = sigma.values_at(s.rule.points)
    gh = s.grad(pair.function)
    rt_err = gu - prt
    uK2 = s.per_element(uv, uv)
    h2_weighted = float((g.H2 * uK2).sum())
    terms = {"rt_interp": s.inner(rt_err, rt_err)}
    if kind == "CR":
        gf = s.grad(source_solution(mesh, "CR", load))
        pv = s.field(interp_cr(u, mesh))
        terms["h2_term"] = lam**2 * h2_weighted / 144.0
        terms["I_CR"] = 2 * s.inner(rt_err, sv - gf) - 2 * lam * s.inner(uv - pv, uv)
        terms["I_RT"] = 2 * s.inner(rt_err, prt - sv)
        terms["I_CR1"] = 2 * s.inner(rt_err, gf - gh)
        terms["I_CR2"] = 2 * s.inner(prt - sv, sv - gh)
        predicted = gamma_expansion(u, mesh) - lam**2 * h2_weighted / 144.0
    else:
        pv = s.field(interp_ecr(u, mesh))
        p0 = load.coeffs[:, None] / lam
        terms["ecr_interp"] = -2 * lam * s.inner(uv - pv, uv - p0)
        terms["I_ECR"] = 2 * s.inner(rt_err, sv - gh)
        predicted = gamma_expansion(u, mesh)
    return LevelExpansion(
        kind=kind,
        level=mesh.level,
        h=mesh.h,
        H2=float(g.H2.max()),
        lam_h=pair.eigenvalue,
        error=lam - pair.eigenvalue,
        terms=terms,
        predicted=predicted,
        uniform=check_uniformity(mesh).is_uniform,
    )


@dataclass
class ExpansionReport:
    levels: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        out = []
        for lv in self.levels:
            out.append(lv.terms[name] if name in lv.terms else getattr(lv, name))
        return np.array(out, dtype=float)

    def rates(self, name: str) -> np.ndarray:
        return observed_rates(np.abs(self.column(name)))

    def to_csv(self, path) -> None:
        keys = sorted({k for lv in self.levels for k in lv.terms})
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "level", "h", "H2", "lambda_h", "error", *keys, "sum", "residual", "predicted", "leading_residual"])
            for lv in self.levels:
                w.writerow([lv.kind, lv.level, repr(lv.h), repr(lv.H2), repr(lv.lam_h), repr(lv.error),
                            *[repr(lv.terms.get(k, float("nan"))) for k in keys],
                            repr(lv.total), repr(lv.residual), repr(lv.predicted), repr(lv.leading_residual)])


def expansion_report(meshes, lam: float, u: AnalyticField, kind: str = "CR") -> ExpansionReport:
    return ExpansionReport([decompose_error(m, lam, u, kind) for m in meshes])


# -- superclose ------------------------------------------------------------------------------
def superclose_check(mesh: Mesh, lam: float, u: AnalyticField, kind: str = "CR", tol: float = 1e-11) -> float:
    """CR: ||grad_h(u_CR - u_CR^f)||; ECR: ||sigma - grad_h u_ECR|| with f = Pi0(lam u)."""
    s = _Sampler(mesh)
    load = project_p0(lambda x, y: lam * np.asarray(u(x, y)), mesh)
    pair = discrete_eigenpair(mesh, kind, align_with=u, tol=tol)
    gh = s.grad(pair.function)
    if kind == "CR":
        other = s.grad(source_solution(mesh, "CR", load))
    elif kind == "ECR":
        sigma, _ = mixed_solution(mesh, load)
        other = sigma.values_at(s.rule.points)
    else:
        raise ValueError("kind must be CR or ECR")
    d = gh - other
    return math.sqrt(s.inner(d, d))


# -- extrapolation and rates -----------------------------------------------------------------
def richardson_known(lam_h: float, lam_2h: float, alpha: float) -> float:
    """Two-mesh extrapolation (2^a lam_h - lam_2h) / (2^a - 1) for error ~ C h^a."""
    if not alpha > 0:
        raise ExtrapolationError("alpha must be positive")
    q = 2.0**alpha
    return (q * lam_h - lam_2h) / (q - 1.0)


def richardson_unknown(lam_4h: float, lam_2h: float, lam_h: float) -> tuple[float, float]:
    """Three-mesh extrapolation with the rate eliminated; returns (value, alpha_hat).

    alpha_hat is NaN when the differences change sign.
    """
    den = lam_4h + lam_h - 2.0 * lam_2h
    scale = max(abs(lam_4h), abs(lam_2h), abs(lam_h), 1e-300)
    if abs(den) <= 64 * np.finfo(float).eps * scale:
        raise ExtrapolationError("second difference vanishes; sequence is not asymptotically geometric")
    value = ((lam_4h - lam_2h) * lam_h - (lam_2h - lam_h) * lam_2h) / den
    ratio = (lam_4h - lam_2h) / (lam_2h - lam_h) if lam_2h != lam_h else float("inf")
    alpha = math.log2(ratio) if 0 < ratio < float("inf") else float("nan")
    return value, alpha


def observed_rates(errors) -> np.ndarray:
    """log2(e_i / e_{i+1}); NaN where an error is non-positive or missing."""
    e = np.asarray(errors, dtype=float)
    out = np.full(max(len(e) - 1, 0), np.nan)
    for i in range(len(out)):
        a, b = e[i], e[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0:
            out[i] = math.log2(a / b)
    return out


@dataclass
class ExtrapolationTable:
    """Raw and extrapolated eigenvalues of one eigenvalue index over levels."""

    levels: list
    h: list
    raw: np.ndarray
    reference: float | None
    alpha: float
    exp1: np.ndarray = None  # two-mesh, known alpha, uses (l-1, l)
    exp2: np.ndarray = None  # three-mesh, uses (l-2, l-1, l)
    alpha_hat: np.ndarray = None

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        n = len(raw)
        self.raw = raw
        self.exp1 = np.full(n, np.nan)
        self.exp2 = np.full(n, np.nan)
        self.alpha_hat = np.full(n, np.nan)
        for i in range(1, n):
            self.exp1[i] = richardson_known(raw[i], raw[i - 1], self.alpha)
        for i in range(2, n):
            try:
                self.exp2[i], self.alpha_hat[i] = richardson_unknown(raw[i - 2], raw[i - 1], raw[i])
            except ExtrapolationError:
                pass

    def errors(self, which: str = "raw") -> np.ndarray:
        if self.reference is None:
            return np.full(len(self.raw), np.nan)
        return np.abs(self.reference - getattr(self, which))

    def rates(self, which: str = "raw") -> np.ndarray:
        return observed_rates(self.errors(which))

    def as_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d
