import json

import numpy as np
import pytest

from eigx import cli
from eigx.bench import (CSV_COLUMNS, ConfigError, ExperimentConfig, ResultRow, error_plot_svg, reference_eigenvalues,
                        run_example, run_verification_suite, square_eigenvalues)
from oracles import square_dirichlet_eigenvalues


def test_square_eigenvalues_with_multiplicity():
    assert np.allclose(square_eigenvalues(10), square_dirichlet_eigenvalues(10))
    assert square_eigenvalues(3)[1] == square_eigenvalues(3)[2]


@pytest.mark.parametrize("bad", [dict(example="disk"), dict(element="q2"), dict(num_eigs=0),
                                 dict(levels=3, min_level=2), dict(alpha=-1.0), dict(crack_bc="robin"),
                                 dict(example="crack", reference="analytic")])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_config_aliases_and_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"example": "jump", "element": "ECR", "levels": 5}))
    cfg = ExperimentConfig.from_json(str(p), levels=6)
    assert cfg.example == "jump_triangle" and cfg.element == "ecr" and cfg.levels == 6
    assert cfg.reference_kind == "p3" and cfg.p3_level == 7
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json('{"colour": 1}')
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")


def test_result_row_csv_formatting():
    row = ResultRow(level=3, h=0.5, n_dofs=10, eig_index=1, lambda_h=19.1)
    vals = row.csv_values()
    assert len(vals) == len(CSV_COLUMNS)
    assert vals[:5] == ["3", "0.5", "10", "1", "19.1"] and vals[5:] == [""] * 9


def test_run_example_square_cr(tmp_path):
    cfg = ExperimentConfig(example="square", element="cr", levels=5, num_eigs=3, out=str(tmp_path / "o.csv"),
                           svg=str(tmp_path / "o.svg"))
    res = run_example(cfg)
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 4 * 3
    assert all(r.error >= 0 for r in res.rows)
    assert np.all(res.column("lambda_h", 1) < 2 * np.pi**2)
    assert (tmp_path / "o.svg").read_text().startswith("<svg")
    assert "polyline" in error_plot_svg(res)


def test_csv_bitwise_deterministic():
    cfg = dict(example="square_nonuniform", element="ecr", levels=5, num_eigs=2, seed=11)
    assert run_example(ExperimentConfig(**cfg)).to_csv() == run_example(ExperimentConfig(**cfg)).to_csv()


def test_reference_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("EIGX_CACHE", str(tmp_path))
    r1 = reference_eigenvalues("crack", 4, 2)
    r2 = reference_eigenvalues("crack", 4, 2)
    assert not r1.cached and r2.cached
    assert np.array_equal(r1.values, r2.values)
    assert len(list(tmp_path.iterdir())) == 1


def test_reference_square_matches_analytic(tmp_path, monkeypatch):
    monkeypatch.setenv("EIGX_CACHE", str(tmp_path))
    ref = reference_eigenvalues("square", 6, 4)
    assert np.abs(ref.values - square_eigenvalues(4)).max() <= 1e-7


def test_reference_budget():
    with pytest.raises(ConfigError, match="lower the level"):
        reference_eigenvalues("crack", 12, 1, use_cache=False)


def test_run_with_explicit_reference():
    cfg = ExperimentConfig(example="crack", element="cr", levels=4, num_eigs=2)
    res = run_example(cfg, reference=np.array([8.3713, 12.337]))
    assert np.all(np.isfinite(res.column("error", 2)))


def test_verification_suite_quick():
    rep = run_verification_suite(seed=3, quick=True)
    assert rep.passed
    data = json.loads(rep.to_json())
    assert {"check_id", "max_residual", "tolerance", "passed"} <= set(data["checks"][0])
    gam = [c for c in rep.checks if c.check_id == "gamma_constancy_square5"]
    assert gam and gam[0].passed and gam[0].max_residual > 1e-6  # reported, not failed


# -- CLI ------------------------------------------------------------------------------------
def test_cli_run_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--example", "square", "--element", "cr", "--levels", "4", "--num-eigs", "2",
                     "--seed", "7", "--out", str(out)]) == 0
    assert out.read_text().startswith("level,h,")
    assert cli.main(["run", "--example", "disk"]) == 2
    assert cli.main(["run", "--num-eigs", "0"]) == 2
    assert cli.main(["bogus"]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_config_file_with_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"example": "square", "element": "ecr", "levels": 6, "num_eigs": 1}))
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--config", str(cfg), "--levels", "4", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[-1].startswith("4,")


def test_cli_gamma_mesh_reference(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("EIGX_CACHE", str(tmp_path))
    assert cli.main(["gamma", "--example", "square", "--level", "3"]) == 0
    g = json.loads(capsys.readouterr().out)
    assert g["constant"] and g["mean"][0] == pytest.approx(1 / 6)
    path = tmp_path / "mesh.json"
    assert cli.main(["mesh", "dump", "--example", "crack", "--level", "2", "--out", str(path)]) == 0
    assert {"vertices", "triangles", "boundary_tags"} <= set(json.loads(path.read_text()))
    assert cli.main(["reference", "--example", "jump", "--level", "4", "--num-eigs", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["cached"] is False


def test_cli_verify(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert cli.main(["verify", "--seed", "7", "--quick", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"] is True


def test_solver_failure_marks_row_and_continues(monkeypatch, capsys):
    import eigx.bench as bench
    from eigx.solve import ConvergenceError

    real = bench.solve_eigs_smallest

    def flaky(A, B, k, **kw):
        if A.shape[0] == 40:  # square level 3
            raise ConvergenceError("forced")
        return real(A, B, k, **kw)

    monkeypatch.setattr(bench, "solve_eigs_smallest", flaky)
    res = run_example(ExperimentConfig(example="square", levels=5, num_eigs=1))
    assert res.failures and res.failures[0][0] == 3
    assert np.isnan(res.column("lambda_h")[1]) and np.isfinite(res.column("lambda_h")[2])
    assert cli.main(["run", "--example", "square", "--levels", "5"]) == 3


def test_verify_failure_exit_code(monkeypatch):
    import eigx.checks as checks

    monkeypatch.setattr(checks, "run_all", lambda seed, quick=False: [checks._result("forced", 1.0, 0.0)])
    assert cli.main(["verify"]) == 4
