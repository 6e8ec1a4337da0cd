"""Slit square: first eight eigenvalues, singular modes 1 and 6, against an extrapolated P3 reference."""
from _common import outdir, parser, print_table

from eigx.bench import ExperimentConfig, run_example

if __name__ == "__main__":
    p = parser(__doc__, levels=7, num_eigs=8)
    p.add_argument("--reference-level", type=int, default=7)
    p.add_argument("--crack-bc", choices=["dirichlet", "neumann"], default="dirichlet")
    args = p.parse_args()
    out = outdir(args.outdir)
    for el in args.elements.split(","):
        cfg = ExperimentConfig(example="crack", element=el, levels=args.levels, num_eigs=args.num_eigs,
                               reference_level=args.reference_level, crack_bc=args.crack_bc, seed=args.seed,
                               out=str(out / f"crack_{el}.csv"), svg=str(out / f"crack_{el}.svg"))
        print_table(run_example(cfg))
