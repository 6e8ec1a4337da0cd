"""Experiment drivers: eigenvalue convergence tables with extrapolation.

Examples
--------
``square``             unit square, diagonal mesh, exact (m^2 + n^2) pi^2
``square_nonuniform``  unit square, five-triangle non-uniform initial mesh
``jump_triangle``      triangle with A = 2 below x2 = 1, P3 reference
``crack``              slit square (-1, 1)^2, P3 reference
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .analysis import ExtrapolationTable, richardson_unknown, ExtrapolationError
from .assembly import CoefficientField, apply_dirichlet, assemble_mass, assemble_stiffness, jump_coefficient
from .mesh import Mesh, build_initial, refine_uniform
from .solve import SolverError, solve_eigs_smallest
from .spaces import FeSpace

EXAMPLES = {
    "square": "square2",
    "square_nonuniform": "square5",
    "jump_triangle": "triangle_jump",
    "crack": "crack8",
}
ALIASES = {"jump": "jump_triangle", "nonuniform": "square_nonuniform", "square5": "square_nonuniform",
           "square2": "square", "triangle_jump": "jump_triangle", "crack8": "crack"}
ELEMENTS = ("cr", "ecr", "p3")
CSV_COLUMNS = ["level", "h", "n_dofs", "eig_index", "lambda_h", "reference", "error", "rate",
               "exp1", "exp1_error", "exp1_rate", "exp2", "exp2_error", "exp2_rate"]
P3_DOF_BUDGET = 1_500_000


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def canonical_example(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in EXAMPLES:
        raise ConfigError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    return name


@dataclass
class ExperimentConfig:
    example: str = "square"
    element: str = "cr"
    levels: int = 7
    min_level: int = 2
    num_eigs: int = 1
    alpha: float = 2.0
    reference: str = "auto"  # auto | analytic | p3
    reference_level: int | None = None
    crack_bc: str = "dirichlet"
    seed: int = 0
    tol: float = 1e-10
    out: str | None = None
    svg: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            self.example = canonical_example(self.example)
        except ConfigError:
            raise
        self.element = str(self.element).lower()
        if self.element not in ELEMENTS:
            raise ConfigError(f"unknown element {self.element!r}; choose from {ELEMENTS}")
        if self.num_eigs < 1:
            raise ConfigError("num_eigs must be >= 1")
        if self.min_level < 1 or self.levels < self.min_level:
            raise ConfigError("need 1 <= min_level <= levels")
        if self.levels - self.min_level < 2:
            raise ConfigError("at least three levels are needed for the three-mesh extrapolation")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if self.crack_bc not in ("dirichlet", "neumann"):
            raise ConfigError("crack_bc must be 'dirichlet' or 'neumann'")
        if self.reference not in ("auto", "analytic", "p3"):
            raise ConfigError("reference must be auto, analytic or p3")
        if self.reference == "analytic" and not self.example.startswith("square"):
            raise ConfigError(f"no analytic eigenvalues for {self.example}")

    @property
    def domain(self) -> str:
        return EXAMPLES[self.example]

    @property
    def reference_kind(self) -> str:
        if self.reference != "auto":
            return self.reference
        return "analytic" if self.example.startswith("square") else "p3"

    @property
    def p3_level(self) -> int:
        return self.reference_level if self.reference_level is not None else self.levels + 1

    @classmethod
    def from_json(cls, path_or_text: str, **overrides) -> "ExperimentConfig":
        text = path_or_text
        if not text.lstrip().startswith("{"):
            text = Path(path_or_text).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ResultRow:
    level: int
    h: float
    n_dofs: int
    eig_index: int  # 1-based
    lambda_h: float
    reference: float = math.nan
    error: float = math.nan
    rate: float = math.nan
    exp1: float = math.nan
    exp1_error: float = math.nan
    exp1_rate: float = math.nan
    exp2: float = math.nan
    exp2_error: float = math.nan
    exp2_rate: float = math.nan

    def csv_values(self) -> list[str]:
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                out.append(str(int(v)))
            elif v is None or not np.isfinite(v):
                out.append("")
            else:
                out.append(repr(float(v)))
        return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    tables: list  # one ExtrapolationTable per eigenvalue index
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def rows_for(self, eig_index: int) -> list:
        return [r for r in self.rows if r.eig_index == eig_index]

    def column(self, name: str, eig_index: int = 1) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows_for(eig_index)], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_values())
        return buf.getvalue()


# -- model problems -------------------------------------------------------------------
def square_eigenvalues(k: int) -> np.ndarray:
    """Smallest k Dirichlet eigenvalues of the unit square, with multiplicity."""
    n = int(math.isqrt(4 * k)) + 2
    vals = sorted((m * m + j * j) * math.pi**2 for m in range(1, n + 1) for j in range(1, n + 1))
    return np.array(vals[:k])


def dirichlet_tags_for(example: str, crack_bc: str = "dirichlet") -> tuple:
    if example == "crack" and crack_bc == "dirichlet":
        return ("dirichlet", "crack_upper", "crack_lower")
    return ("dirichlet",)


def coefficient_for(example: str, mesh: Mesh) -> CoefficientField | None:
    return jump_coefficient(mesh) if example == "jump_triangle" else None


def discrete_eigenvalues(mesh: Mesh, element: str, k: int, example: str, crack_bc: str = "dirichlet",
                         tol: float = 1e-10, seed: int = 0) -> tuple[np.ndarray, int]:
    """Smallest k eigenvalues of the chosen discretization and the free DOF count."""
    space = FeSpace(mesh, element.upper(), dirichlet_tags_for(example, crack_bc))
    A = coefficient_for(example, mesh)
    Ks = apply_dirichlet(space, assemble_stiffness(space, A))
    Ms = apply_dirichlet(space, assemble_mass(space))
    n = Ks.matrix.shape[0]
    if k > n:
        raise ConfigError(f"{k} eigenvalues requested but level {mesh.level} has only {n} free DOFs")
    res = solve_eigs_smallest(Ks.matrix, Ms.matrix, k, tol=tol, seed=seed)
    return res.eigenvalues, n


# -- reference eigenvalues ---------------------------------------------------------------
@dataclass
class ReferenceResult:
    values: np.ndarray
    raw: dict  # level -> eigenvalues
    alpha_hat: np.ndarray
    level: int
    cached: bool = False
    path: str | None = None


def cache_dir() -> Path:
    root = os.environ.get("EIGX_CACHE")
    return Path(root) if root else Path.home() / ".cache" / "eigx"


def _p3_dofs_estimate(mesh: Mesh, levels_up: int) -> int:
    M = mesh.n_triangles * 4**levels_up
    return int(4.6 * M)


def reference_eigenvalues(example: str, L: int, k: int, seed: int = 0, crack_bc: str = "dirichlet",
                          use_cache: bool = True, directory: Path | None = None) -> ReferenceResult:
    """P3 eigenvalues on level L, improved by three-mesh extrapolation (L-2, L-1, L).

    Entries whose P3 sequence is not geometric fall back to the level-L value.
    Results are cached on disk keyed by (example, L, k, crack_bc).
    """
    example = canonical_example(example)
    if L < 3:
        raise ConfigError("the reference level must be >= 3")
    directory = cache_dir() if directory is None else Path(directory)
    path = directory / f"p3_{example}_L{L}_k{k}_{crack_bc}.json"
    if use_cache and path.exists():
        data = json.loads(path.read_text())
        return ReferenceResult(np.array(data["values"]), {int(a): np.array(b) for a, b in data["raw"].items()},
                               np.array(data["alpha_hat"], dtype=float), L, True, str(path))
    mesh = build_initial(EXAMPLES[example])
    if _p3_dofs_estimate(mesh, L - 1) > P3_DOF_BUDGET:
        raise ConfigError(f"P3 reference at level {L} exceeds the DOF budget ({P3_DOF_BUDGET}); lower the level")
    raw = {}
    while mesh.level < L - 2:
        mesh = refine_uniform(mesh)
    for lvl in (L - 2, L - 1, L):
        raw[lvl], _ = discrete_eigenvalues(mesh, "p3", k, example, crack_bc, tol=1e-11, seed=seed)
        if lvl < L:
            mesh = refine_uniform(mesh)
    values = np.array(raw[L], dtype=float)
    alpha_hat = np.full(k, np.nan)
    for i in range(k):
        try:
            v, a = richardson_unknown(raw[L - 2][i], raw[L - 1][i], raw[L][i])
        except ExtrapolationError:
            continue
        if np.isfinite(a) and a > 0:
            values[i], alpha_hat[i] = v, a
    if use_cache:
        directory.mkdir(parents=True, exist_ok=True)
        payload = {"example": example, "level": L, "k": k, "crack_bc": crack_bc, "values": values.tolist(),
                   "raw": {str(a): b.tolist() for a, b in raw.items()},
                   "alpha_hat": [None if not np.isfinite(a) else float(a) for a in alpha_hat]}
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=1))
        tmp.replace(path)
    return ReferenceResult(values, raw, alpha_hat, L, False, str(path) if use_cache else None)


# -- experiments ----------------------------------------------------------------------------
def run_example(config: ExperimentConfig, reference: np.ndarray | None = None) -> ExperimentResult:
    """Solve on every level, attach references, extrapolate, and write outputs."""
    t0 = time.perf_counter()
    cfg = config
    k = cfg.num_eigs
    if reference is None:
        if cfg.reference_kind == "analytic":
            reference = square_eigenvalues(k)
        else:
            reference = reference_eigenvalues(cfg.example, cfg.p3_level, k, cfg.seed, cfg.crack_bc).values
    reference = np.asarray(reference, dtype=float)

    mesh = build_initial(cfg.domain)
    levels, hs, ndofs, lams, failures = [], [], [], [], []
    while mesh.level <= cfg.levels:
        if mesh.level >= cfg.min_level:
            try:
                lam, n = discrete_eigenvalues(mesh, cfg.element, k, cfg.example, cfg.crack_bc, cfg.tol, cfg.seed)
            except SolverError as exc:
                lam, n = np.full(k, np.nan), -1
                failures.append((mesh.level, str(exc)))
            levels.append(mesh.level)
            hs.append(mesh.h)
            ndofs.append(n)
            lams.append(lam)
        if mesh.level == cfg.levels:
            break
        mesh = refine_uniform(mesh)
    lams = np.array(lams)

    tables, rows = [], []
    for i in range(k):
        tab = ExtrapolationTable(levels, hs, lams[:, i], float(reference[i]), cfg.alpha)
        tables.append(tab)
        err, e1, e2 = tab.errors("raw"), tab.errors("exp1"), tab.errors("exp2")
        r, r1, r2 = tab.rates("raw"), tab.rates("exp1"), tab.rates("exp2")
        for j, lvl in enumerate(levels):
            rows.append(ResultRow(
                level=lvl, h=hs[j], n_dofs=ndofs[j], eig_index=i + 1, lambda_h=tab.raw[j],
                reference=tab.reference, error=err[j], rate=r[j - 1] if j else math.nan,
                exp1=tab.exp1[j], exp1_error=e1[j], exp1_rate=r1[j - 1] if j else math.nan,
                exp2=tab.exp2[j], exp2_error=e2[j], exp2_rate=r2[j - 1] if j else math.nan,
            ))
    # rows ordered by level, then eigenvalue index
    rows.sort(key=lambda r: (r.level, r.eig_index))
    result = ExperimentResult(cfg, rows, tables, failures, time.perf_counter() - t0)
    if cfg.out:
        Path(cfg.out).write_text(result.to_csv())
    if cfg.svg:
        Path(cfg.svg).write_text(error_plot_svg(result))
    return result


# -- plotting ---------------------------------------------------------------------------------
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def error_plot_svg(result: ExperimentResult, width: int = 640, height: int = 480) -> str:
    """Log-log error against h: raw (solid), exp1 (dashed), exp2 (dotted) per eigenvalue."""
    series = []
    for i, tab in enumerate(result.tables):
        for which, dash in (("raw", ""), ("exp1", "6,3"), ("exp2", "2,3")):
            e = tab.errors(which)
            pts = [(h, v) for h, v in zip(tab.h, e) if np.isfinite(v) and v > 0]
            if pts:
                series.append((f"lambda{i + 1} {which}", _COLORS[i % len(_COLORS)], dash, pts))
    m = 60
    if not series:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"></svg>\n'
    hx = [math.log10(p[0]) for s in series for p in s[3]]
    ey = [math.log10(p[1]) for s in series for p in s[3]]
    x0, x1 = min(hx), max(hx)
    y0, y1 = math.floor(min(ey)), math.ceil(max(ey))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return m + (math.log10(v) - x0) / (x1 - x0) * (width - 2 * m)

    def sy(v):
        return height - m - (math.log10(v) - y0) / (y1 - y0) * (height - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
           f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" fill="none" stroke="#444"/>']
    for d in range(y0, y1 + 1):
        y = sy(10.0**d)
        out.append(f'<line x1="{m}" y1="{y:.1f}" x2="{width - m}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{m - 6}" y="{y + 4:.1f}" text-anchor="end">1e{d}</text>')
    for h in result.tables[0].h:
        x = sx(h)
        out.append(f'<text x="{x:.1f}" y="{height - m + 16}" text-anchor="middle">{h:.3g}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">h</text>')
    out.append(f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">error</text>')
    for j, (label, color, dash, pts) in enumerate(series):
        poly = " ".join(f"{sx(h):.1f},{sy(e):.1f}" for h, e in pts)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline points="{poly}" fill="none" stroke="{color}"{dash_attr}/>')
        for h, e in pts:
            out.append(f'<circle cx="{sx(h):.1f}" cy="{sy(e):.1f}" r="2.5" fill="{color}"/>')
        out.append(f'<text x="{width - m + 4}" y="{m + 12 * j}" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- verification suite ---------------------------------------------------------------------
@dataclass
class VerificationReport:
    seed: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "passed": self.passed,
                           "checks": [c.as_dict() for c in self.checks]}, indent=1)


def run_verification_suite(seed: int = 0, quick: bool = False) -> VerificationReport:
    from .checks import run_all

    return VerificationReport(seed, run_all(seed, quick=quick))
