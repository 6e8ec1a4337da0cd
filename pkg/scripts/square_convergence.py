"""Unit square, diagonal mesh: CR and ECR errors against (m^2 + n^2) pi^2 with both extrapolations."""
from _common import outdir, parser, print_table

from eigx.bench import ExperimentConfig, run_example

if __name__ == "__main__":
    args = parser(__doc__, levels=7, num_eigs=4).parse_args()
    out = outdir(args.outdir)
    for el in args.elements.split(","):
        cfg = ExperimentConfig(example="square", element=el, levels=args.levels, num_eigs=args.num_eigs,
                               seed=args.seed, out=str(out / f"square_{el}.csv"), svg=str(out / f"square_{el}.svg"))
        print_table(run_example(cfg))
