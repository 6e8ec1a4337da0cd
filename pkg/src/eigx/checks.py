"""Exact-identity checks driven by the verification suite.

Each check returns a :class:`CheckResult` with the worst residual seen and
the tolerance it is held to.  Residuals are relative to a natural scale
stated in the check's docstring.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .analysis import (
    _local_interp_error,
    error_identity_check,
    gamma_constants,
    is_parallelogram,
    parallelogram_orthogonality,
    rt_error_direct,
    rt_error_quadratic,
    verify_marini,
)
from .mesh import build_level
from .quad import dunavant, gauss_edge, physical_points
from .spaces import (
    AnalyticField,
    BubbleSet,
    FeSpace,
    cr_interp_error_quadratic,
    interp_cr,
    interp_ecr,
    interp_rt,
    project_p0,
    quadratic_field,
    sine_mode,
)


@dataclass
class CheckResult:
    check_id: str
    max_residual: float
    tolerance: float
    passed: bool
    info: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _result(check_id, residual, tol, info="", informational=False) -> CheckResult:
    residual = float(residual)
    return CheckResult(check_id, residual, tol, bool(informational or residual <= tol), info)


def random_cubic(rng: np.random.Generator) -> AnalyticField:
    """Random cubic polynomial with exact gradient and Hessian."""
    c = rng.normal(size=10)
    # monomials: 1 x y x2 xy y2 x3 x2y xy2 y3

    def value(x, y):
        return (c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
                + c[6] * x**3 + c[7] * x * x * y + c[8] * x * y * y + c[9] * y**3)

    def grad(x, y):
        gx = c[1] + 2 * c[3] * x + c[4] * y + 3 * c[6] * x * x + 2 * c[7] * x * y + c[8] * y * y
        gy = c[2] + c[4] * x + 2 * c[5] * y + c[7] * x * x + 2 * c[8] * x * y + 3 * c[9] * y * y
        return np.stack([gx, gy], -1)

    def hess(x, y):
        hxx = 2 * c[3] + 6 * c[6] * x + 2 * c[7] * y
        hxy = c[4] + 2 * c[7] * x + 2 * c[8] * y
        hyy = 2 * c[5] + 2 * c[8] * x + 6 * c[9] * y
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    return AnalyticField(value, grad, hess)


def check_commuting(kind: str, seed: int = 0, n_fields: int = 5, domain: str = "square5", level: int = 2) -> CheckResult:
    """max |int_K grad(w - Pi w).grad(v_h)| / (|K| max|grad w| max|grad v_h|).

    The normalization makes the residual independent of units and of the
    element aspect ratio, which otherwise scales rounding error through
    |grad v_h| ~ 1/height.
    """
    rng = np.random.default_rng(seed)
    mesh = build_level(domain, level)
    space = FeSpace(mesh, kind)
    rule = dunavant(6)
    g = mesh.geometry
    X = physical_points(g.vertices, rule)
    _, basis_grads = space.local_basis(rule.points)
    worst = 0.0
    for _ in range(n_fields):
        w = random_cubic(rng)
        Pw = (interp_cr if kind == "CR" else interp_ecr)(w, space)
        e = w.grad(X[..., 0], X[..., 1]) - Pw.grads_at(rule.points)
        loc = np.einsum("q,mqd,mqjd->mj", rule.weights, e, basis_grads)  # already divided by |K|
        gw = np.linalg.norm(w.grad(X[..., 0], X[..., 1]), axis=-1).max(axis=1)
        gv = np.linalg.norm(basis_grads, axis=-1).max(axis=1)
        worst = max(worst, (np.abs(loc) / (gw[:, None] * gv)).max())
    return _result(f"commuting_{kind.lower()}", worst, 1e-12, f"{domain} level {level}, {n_fields} random cubics")


def check_fortin(seed: int = 0, n_fields: int = 5) -> CheckResult:
    """|div Pi_RT q - Pi0 div q| relative to max |div q| for random quadratic q."""
    rng = np.random.default_rng(seed)
    mesh = build_level("square5", 2)
    c = mesh.geometry.centroid
    worst = 0.0
    for _ in range(n_fields):
        a, b = rng.normal(size=6), rng.normal(size=6)
        qa, qb = quadratic_field(a), quadratic_field(b)
        q = lambda x, y: np.stack([qa(x, y), qb(x, y)], -1)
        div = qa.grad(c[:, 0], c[:, 1])[:, 0] + qb.grad(c[:, 0], c[:, 1])[:, 1]  # linear: centroid = mean
        d = interp_rt(q, mesh).divergence()
        worst = max(worst, np.abs(d - div).max() / np.abs(div).max())
    return _result("fortin_commuting", worst, 1e-12)


def check_marini(domain: str, level: int) -> CheckResult:
    """Max pointwise gap of both reconstructions relative to max |sigma|."""
    rep = verify_marini(build_level(domain, level), 2 * np.pi**2, sine_mode())
    return _result(f"marini_{domain}_l{level}", max(rep.relative), 1e-9)


def check_gamma_constancy(domain: str, level: int) -> CheckResult:
    """Spread of elementwise gamma relative to their magnitude."""
    gam = gamma_constants(build_level(domain, level))
    scale = max(np.abs(gam.g11).max(), np.abs(gam.g22).max())
    spread = max(np.ptp(gam.g11), np.ptp(gam.g12), np.ptp(gam.g22)) / scale
    uniform_expected = domain != "square5"
    info = "gamma = (%.15g, %.15g, %.15g)" % gam.mean() if uniform_expected else "non-uniform mesh: spread reported only"
    return _result(f"gamma_constancy_{domain}", spread, 1e-12, info, informational=not uniform_expected)


def check_gamma_quadratic(seed: int = 0, n_fields: int = 50, domain: str = "square5", level: int = 2) -> CheckResult:
    """Per-element |expansion - direct| / direct for random quadratics."""
    rng = np.random.default_rng(seed)
    mesh = build_level(domain, level)
    gam = gamma_constants(mesh)
    worst = 0.0
    for _ in range(n_fields):
        w = quadratic_field(rng.normal(size=6))
        direct = rt_error_direct(w.grad, mesh, rule=dunavant(6))
        expansion = rt_error_quadratic(w.hess(0.0, 0.0), mesh, gam)
        worst = max(worst, (np.abs(expansion - direct) / np.maximum(direct, 1e-300)).max())
    return _result("gamma_quadratic_expansion", worst, 1e-11, f"{n_fields} random quadratics on {domain} level {level}")


def random_parallelogram_pair(rng: np.random.Generator):
    P1 = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    P2 = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    A = rng.normal(size=(2, 2))
    while abs(np.linalg.det(A)) < 0.2:
        A = rng.normal(size=(2, 2))
    b = rng.normal(size=2)
    return P1 @ A.T + b, P2 @ A.T + b


def check_parallelogram(kind: str, seed: int = 0, n_pairs: int = 100) -> CheckResult:
    """|(w - Pi w, v - Pi0 v)| divided by the Cauchy-Schwarz bound, random affine pairs."""
    rng = np.random.default_rng(seed)
    rule = dunavant(4)
    worst = 0.0
    for _ in range(n_pairs):
        P1, P2 = random_parallelogram_pair(rng)
        wc, vc = rng.normal(size=6), rng.normal(size=3)
        val = parallelogram_orthogonality(P1, P2, wc, vc, kind)
        nw = nv = 0.0
        for P in (P1, P2):
            X = rule.points @ P
            area = 0.5 * abs(np.linalg.det(np.column_stack([P[1] - P[0], P[2] - P[0]])))
            nw += area * rule.weights @ _local_interp_error(P, wc, kind, rule.points) ** 2
            nv += area * rule.weights @ ((X - P.mean(axis=0)) @ vc[1:]) ** 2
        worst = max(worst, abs(val) / np.sqrt(nw * nv))
    return _result(f"parallelogram_{kind.lower()}", worst, 1e-12, f"{n_pairs} random affine pairs")


def check_parallelogram_rejects(seed: int = 0) -> CheckResult:
    """A pair with one vertex moved by 1e-3 must fail the precondition."""
    P1, P2 = random_parallelogram_pair(np.random.default_rng(seed))
    P2 = P2.copy()
    P2[2] += 1e-3
    rejected = not is_parallelogram(P1, P2)
    try:
        parallelogram_orthogonality(P1, P2, np.ones(6), np.ones(3))
        raised = False
    except ValueError:
        raised = True
    ok = rejected and raised
    return _result("parallelogram_precondition", 0.0 if ok else 1.0, 0.0, "perturbed pair rejected" if ok else "not rejected")


def check_error_identity(kind: str, levels=(3, 4, 5, 6)) -> list[CheckResult]:
    """Relative residual of the error identity and of the commuting rewrite."""
    out = []
    u, lam = sine_mode(), 2 * np.pi**2
    worst = worst_c = 0.0
    for level in levels:
        rep = error_identity_check(build_level("square2", level), kind, lam, u)
        worst = max(worst, rep.residual)
        worst_c = max(worst_c, rep.commuting_residual)
    lv = f"square2 levels {levels[0]}-{levels[-1]}"
    out.append(_result(f"error_identity_{kind.lower()}", worst, 1e-8, lv))
    out.append(_result(f"commuting_rewrite_{kind.lower()}", worst_c, 1e-8, lv))
    return out


def check_bubbles(domain: str = "square5", level: int = 2) -> CheckResult:
    """Edge means of the bubbles, unit mean of phi_ECR and its tangential curvature."""
    mesh = build_level(domain, level)
    g = mesh.geometry
    B = BubbleSet(mesh)
    er = gauss_edge(5)
    tr = dunavant(4)
    worst = 0.0
    for k in range(mesh.n_triangles):
        P = g.vertices[k]
        for j in range(3):
            a, b = P[(j + 1) % 3], P[(j + 2) % 3]
            pts = a + er.points[:, None] * (b - a)
            for i in range(3):
                worst = max(worst, abs(B.cr(k, i, pts) @ er.weights))
            if j == k % 3:
                worst = max(worst, abs(B.ecr(k, pts) @ er.weights))
        X = tr.points @ P
        worst = max(worst, abs(tr.weights @ B.ecr(k, X) - 1.0))
        delta = 0.5 * g.diameter[k]
        M = g.centroid[k]
        for j in range(3):
            t = g.tangents[k, j]
            d2 = (B.ecr(k, M + delta * t) - 2 * B.ecr(k, M) + B.ecr(k, M - delta * t)) / delta**2
            exact = B.ecr_tangent_second(k, j)
            worst = max(worst, abs(d2 - exact) / abs(exact))
    return _result("bubble_invariants", worst, 1e-12, f"{domain} level {level}")


def check_cr_error_formula(seed: int = 0, n_fields: int = 10) -> CheckResult:
    """(I - Pi_CR) w against -(1/8) sum |e_i|^2 w_tt phi_CR^i at random points."""
    rng = np.random.default_rng(seed)
    mesh = build_level("square5", 2)
    g = mesh.geometry
    worst = 0.0
    for _ in range(n_fields):
        w = quadratic_field(rng.normal(size=6))
        bary = rng.dirichlet(np.ones(3), size=6)
        X = np.einsum("qk,mkd->mqd", bary, g.vertices)
        err = w(X[..., 0], X[..., 1]) - interp_cr(w, mesh).values_at(bary)
        formula = cr_interp_error_quadratic(mesh, w.hess(0.0, 0.0), bary)
        worst = max(worst, np.abs(err - formula).max())
    return _result("cr_interpolation_error_formula", worst, 1e-11)


def check_p0_projection(seed: int = 0) -> CheckResult:
    """Element means of a linear field equal centroid values."""
    rng = np.random.default_rng(seed)
    mesh = build_level("square5", 3)
    c = rng.normal(size=3)
    f = project_p0(lambda x, y: c[0] + c[1] * x + c[2] * y, mesh)
    M = mesh.geometry.centroid
    return _result("p0_projection_linear", np.abs(f.coeffs - (c[0] + M @ c[1:])).max(), 1e-13)


def run_all(seed: int = 0, quick: bool = False) -> list[CheckResult]:
    levels = (3, 4, 5) if quick else (3, 4, 5, 6)
    results = [
        check_commuting("CR", seed),
        check_commuting("ECR", seed),
        check_fortin(seed),
        check_marini("square2", 4),
        check_marini("square5", 3),
        check_gamma_constancy("square2", 3),
        check_gamma_constancy("square5", 3),
        check_gamma_quadratic(seed),
        check_parallelogram("CR", seed),
        check_parallelogram("ECR", seed),
        check_parallelogram_rejects(seed),
        check_bubbles(),
        check_cr_error_formula(seed),
        check_p0_projection(seed),
    ]
    results += check_error_identity("CR", levels)
    results += check_error_identity("ECR", levels)
    return results
