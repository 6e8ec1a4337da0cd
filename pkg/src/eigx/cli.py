"""Command-line entry point ``eigx``.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import ConfigError, ExperimentConfig, canonical_example, reference_eigenvalues, run_example, run_verification_suite, EXAMPLES
from .solve import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4


def _build_level(example: str, level: int):
    from .mesh import build_level

    return build_level(EXAMPLES[canonical_example(example)], level)


def _cmd_run(args) -> int:
    overrides = dict(example=args.example, element=args.element, levels=args.levels, min_level=args.min_level,
                     num_eigs=args.num_eigs, alpha=args.alpha, reference=args.reference,
                     reference_level=args.reference_level, crack_bc=args.crack_bc, seed=args.seed, tol=args.tol,
                     out=args.out, svg=args.svg)
    if args.config:
        cfg = ExperimentConfig.from_json(args.config, **overrides)
    else:
        cfg = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    result = run_example(cfg)
    if not cfg.out:
        sys.stdout.write(result.to_csv())
    for level, msg in result.failures:
        print(f"level {level}: eigensolver failed: {msg}", file=sys.stderr)
    return EXIT_SOLVER if result.failures else EXIT_OK


def _cmd_verify(args) -> int:
    report = run_verification_suite(args.seed, quick=args.quick)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.check_id:40s} {c.max_residual:.3e} <= {c.tolerance:.1e}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def _cmd_gamma(args) -> int:
    from .analysis import gamma_constants

    g = gamma_constants(_build_level(args.example, args.level))
    out = {"example": canonical_example(args.example), "level": args.level, "h": g.h,
           "constant": bool(g.is_constant()), "mean": [float(v) for v in g.mean()],
           "min": [float(np.min(v)) for v in (g.g11, g.g12, g.g22)],
           "max": [float(np.max(v)) for v in (g.g11, g.g12, g.g22)]}
    print(json.dumps(out, indent=1))
    return EXIT_OK


def _cmd_mesh(args) -> int:
    mesh = _build_level(args.example, args.level)
    text = mesh.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def _cmd_reference(args) -> int:
    ref = reference_eigenvalues(args.example, args.level, args.num_eigs, args.seed, args.crack_bc,
                                use_cache=not args.no_cache)
    out = {"example": canonical_example(args.example), "level": ref.level, "values": ref.values.tolist(),
           "alpha_hat": [None if not np.isfinite(a) else float(a) for a in ref.alpha_hat], "cached": ref.cached}
    print(json.dumps(out, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eigx", description="Nonconforming eigenvalue convergence and extrapolation experiments")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="convergence table for one example")
    r.add_argument("--config", help="JSON config file; flags override its values")
    r.add_argument("--example")
    r.add_argument("--element")
    r.add_argument("--levels", type=int)
    r.add_argument("--min-level", type=int)
    r.add_argument("--num-eigs", type=int)
    r.add_argument("--alpha", type=float)
    r.add_argument("--reference", choices=["auto", "analytic", "p3"])
    r.add_argument("--reference-level", type=int)
    r.add_argument("--crack-bc", choices=["dirichlet", "neumann"])
    r.add_argument("--seed", type=int)
    r.add_argument("--tol", type=float)
    r.add_argument("--out")
    r.add_argument("--svg")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("verify", help="run the identity and invariant checks")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.add_argument("--quick", action="store_true")
    v.set_defaults(func=_cmd_verify)

    g = sub.add_parser("gamma", help="RT interpolation constants of a mesh")
    g.add_argument("--example", default="square")
    g.add_argument("--level", type=int, default=3)
    g.set_defaults(func=_cmd_gamma)

    m = sub.add_parser("mesh", help="mesh utilities")
    msub = m.add_subparsers(dest="mesh_command", required=True)
    d = msub.add_parser("dump", help="write a mesh as JSON")
    d.add_argument("--example", default="square")
    d.add_argument("--level", type=int, default=2)
    d.add_argument("--out")
    d.set_defaults(func=_cmd_mesh)

    f = sub.add_parser("reference", help="extrapolated P3 reference eigenvalues")
    f.add_argument("--example", default="jump_triangle")
    f.add_argument("--level", type=int, default=6)
    f.add_argument("--num-eigs", type=int, default=1)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--crack-bc", choices=["dirichlet", "neumann"], default="dirichlet")
    f.add_argument("--no-cache", action="store_true")
    f.set_defaults(func=_cmd_reference)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
