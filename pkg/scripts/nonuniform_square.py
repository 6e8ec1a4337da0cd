"""Nonuniform five-triangle initial mesh: the first eigenvalue up to level 8, CR and ECR."""
from _common import outdir, parser, print_table

from eigx.bench import ExperimentConfig, run_example

if __name__ == "__main__":
    args = parser(__doc__, levels=8).parse_args()
    out = outdir(args.outdir)
    for el in args.elements.split(","):
        cfg = ExperimentConfig(example="square_nonuniform", element=el, levels=args.levels, num_eigs=args.num_eigs,
                               seed=args.seed, out=str(out / f"nonuniform_{el}.csv"))
        print_table(run_example(cfg))
