"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import time

import numpy as np
import pytest

from eigx import checks
from eigx.analysis import decompose_error, observed_rates
from eigx.assembly import apply_dirichlet, assemble_mass, assemble_stiffness
from eigx.bench import ExperimentConfig, dirichlet_tags_for, run_example
from eigx.mesh import build_level
from eigx.solve import eigs_dense, eigs_shift_invert
from eigx.spaces import FeSpace, sine_mode

LAM1 = 2 * np.pi**2


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return emit


def test_ac1_square_rates_and_extrapolation(report):
    t0 = time.perf_counter()
    lines, ok = [], True
    for el in ("cr", "ecr"):
        res = run_example(ExperimentConfig(example="square", element=el, levels=7, min_level=4, num_eigs=1))
        assert res.tables[0].reference == pytest.approx(LAM1, rel=1e-15)
        r = res.column("rate")[1:]
        r1 = res.column("exp1_rate")[2:]
        ok &= bool(np.all((r >= 1.9) & (r <= 2.1)) and np.all(r1 >= 3.8))
        lines.append(f"{el} rates {np.round(r, 3).tolist()} exp1 rates {np.round(r1, 3).tolist()}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 120
    report("AC1 square2 levels 4-7", ok, "; ".join(lines) + f"; {elapsed:.1f}s")


# published nonuniform-mesh errors, levels 4..8
NONUNIFORM_PUBLISHED = {
    "cr": {"raw": {4: 5.55e-2, 5: 1.39e-2}, "exp1": {6: 3.55e-6, 7: 3.04e-7, 8: 2.39e-8}},
    "ecr": {"raw": {4: 2.01e-1}, "exp1": {6: 5.08e-5, 7: 3.27e-6, 8: 2.09e-7}},
}


def test_ac2_nonuniform_table(report):
    ok, lines = True, []
    for el in ("cr", "ecr"):
        res = run_example(ExperimentConfig(example="square_nonuniform", element=el, levels=8, min_level=2))
        levels = [r.level for r in res.rows]
        err = dict(zip(levels, res.column("error")))
        e1 = dict(zip(levels, res.column("exp1_error")))
        for lvl, pub in NONUNIFORM_PUBLISHED[el]["raw"].items():
            rel = abs(err[lvl] - pub) / pub
            ok &= rel <= 0.02
            lines.append(f"{el} T{lvl} {err[lvl]:.4e} vs {pub:.2e} ({100 * rel:.2f}%)")
        for lvl, pub in NONUNIFORM_PUBLISHED[el]["exp1"].items():
            ratio = e1[lvl] / pub
            ok &= 1 / 3 <= ratio <= 3
            lines.append(f"{el} exp1 T{lvl} ratio {ratio:.3f}")
        if el == "cr":
            rates = res.column("rate")[2:]  # T3->T4 .. T7->T8
            ok &= bool(np.all(np.abs(rates - 2.0) <= 0.05))
            lines.append(f"cr rates {np.round(rates, 3).tolist()}")
    report("AC2 nonuniform table", ok, "; ".join(lines))


def test_ac3_algebraic_identities(report):
    results = [
        checks.check_marini("square2", 4),
        checks.check_marini("square5", 3),
        checks.check_commuting("CR", seed=0),
        checks.check_commuting("ECR", seed=0),
        checks.check_gamma_quadratic(seed=0, n_fields=50),
        checks.check_parallelogram("CR", seed=0, n_pairs=100),
        checks.check_parallelogram("ECR", seed=0, n_pairs=100),
        *checks.check_error_identity("CR", levels=(3, 4, 5, 6)),
        *checks.check_error_identity("ECR", levels=(3, 4, 5, 6)),
    ]
    ok = all(r.passed for r in results)
    report("AC3 identities", ok, "; ".join(f"{r.check_id} {r.max_residual:.1e}<={r.tolerance:.0e}" for r in results))


def test_ac4_expansion_terms(report):
    u = sine_mode()
    ok, lines = True, []
    for kind in ("CR", "ECR"):
        lv = [decompose_error(build_level("square2", L), LAM1, u, kind) for L in (4, 5, 6)]
        rr = observed_rates([abs(x.residual) for x in lv])
        rl = observed_rates([abs(x.leading_residual) for x in lv])
        ok &= bool(np.all(rr >= 3.0) and np.all(rl >= 3.0))
        lines.append(f"{kind} residual rates {np.round(rr, 2).tolist()} leading {np.round(rl, 2).tolist()}")
        if kind == "CR":
            dev = [abs(x.terms["I_CR"] / (-2.0 * x.terms["h2_term"]) - 1.0) for x in lv]
            ok &= bool(np.all(np.diff(dev) < 0))
            lines.append(f"I_CR deviation {[f'{d:.2e}' for d in dev]}")
    report("AC4 expansion", ok, "; ".join(lines))


def test_ac5_crack_rates_and_extrapolation(report):
    ok, lines = True, []
    for el in ("cr", "ecr"):
        res = run_example(ExperimentConfig(example="crack", element=el, levels=7, min_level=3, num_eigs=8,
                                           reference_level=7))
        for i in range(1, 9):
            rate = res.column("rate", i)[-1]
            lo, hi = (0.8, 1.2) if i in (1, 6) else (1.8, 2.2)
            raw, ex2 = res.column("error", i)[-1], res.column("exp2_error", i)[-1]
            good = lo <= rate <= hi and ex2 < raw
            ok &= good
            lines.append(f"{el} l{i} rate {rate:.3f} exp2 {ex2:.1e}<{raw:.1e}")
    report("AC5 crack", ok, "; ".join(lines))


def _pencils_up_to(nmax):
    for domain in ("square2", "square5", "triangle_jump", "crack8"):
        example = {"crack8": "crack"}.get(domain, domain)
        for kind in ("CR", "ECR", "P3"):
            for level in range(1, 8):
                space = FeSpace(build_level(domain, level), kind, dirichlet_tags_for(example))
                n = int((~space.dirichlet_mask).sum())
                if n > nmax:
                    break
                if n < 2:
                    continue
                yield f"{domain}/{kind}/L{level}", space


def test_ac6_solver_agreement_and_determinism(report, tmp_path):
    worst, count = 0.0, 0
    for _, space in _pencils_up_to(2000):
        A = apply_dirichlet(space, assemble_stiffness(space)).matrix
        B = apply_dirichlet(space, assemble_mass(space)).matrix
        k = min(6, A.shape[0] - 1)
        d = eigs_dense(A, B, k).eigenvalues
        s = eigs_shift_invert(A, B, k, tol=1e-12, seed=7).eigenvalues
        worst = max(worst, float(np.max(np.abs(s - d) / d)))
        count += 1
    csvs = []
    for _ in range(2):
        cfg = ExperimentConfig(example="square_nonuniform", element="ecr", levels=6, num_eigs=4, seed=7)
        csvs.append(run_example(cfg).to_csv().encode())
    ok = worst <= 1e-9 and csvs[0] == csvs[1]
    report("AC6 solvers", ok, f"{count} pencils, max rel diff {worst:.1e}; repeated CSV identical: {csvs[0] == csvs[1]}")
