"""Triangle with a coefficient jump across x2 = 1; reference from extrapolated P3.

The interface does not coincide with mesh edges, so the coefficient is
sampled at element centroids and the observed rates stay close to one.
"""
from _common import outdir, parser, print_table

from eigx.bench import ExperimentConfig, run_example

if __name__ == "__main__":
    p = parser(__doc__, levels=7)
    p.add_argument("--reference-level", type=int, default=7)
    args = p.parse_args()
    out = outdir(args.outdir)
    for el in args.elements.split(","):
        cfg = ExperimentConfig(example="jump_triangle", element=el, levels=args.levels, num_eigs=args.num_eigs,
                               reference_level=args.reference_level, seed=args.seed,
                               out=str(out / f"jump_{el}.csv"), svg=str(out / f"jump_{el}.svg"))
        print_table(run_example(cfg))
