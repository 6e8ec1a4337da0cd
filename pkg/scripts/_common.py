"""Shared helpers for the experiment scripts."""
import argparse
from pathlib import Path

import numpy as np


def parser(description, levels, num_eigs=1):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--levels", type=int, default=levels)
    p.add_argument("--num-eigs", type=int, default=num_eigs)
    p.add_argument("--elements", default="cr,ecr")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", default="results")
    return p


def outdir(path):
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def print_table(result):
    print(f"\n{result.config.example} / {result.config.element}  ({result.seconds:.1f}s)")
    print(f"{'lvl':>3} {'k':>2} {'lambda_h':>14} {'error':>10} {'rate':>5} {'exp1 err':>10} {'rate':>5} {'exp2 err':>10} {'rate':>5}")

    def f(v, w, p):
        return f"{v:{w}.{p}}" if np.isfinite(v) else " " * (w - 1) + "-"

    for r in result.rows:
        print(f"{r.level:>3} {r.eig_index:>2} {r.lambda_h:14.8f} {f(r.error, 10, '3e')} {f(r.rate, 5, '2f')} "
              f"{f(r.exp1_error, 10, '3e')} {f(r.exp1_rate, 5, '2f')} {f(r.exp2_error, 10, '3e')} {f(r.exp2_rate, 5, '2f')}")
