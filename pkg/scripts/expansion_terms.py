"""Error-expansion terms on the uniform square mesh: residuals and leading-term agreement."""
import argparse

import numpy as np

from eigx.analysis import expansion_report
from eigx.mesh import build_level
from eigx.spaces import sine_mode

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--levels", default="3,4,5,6")
    p.add_argument("--csv", default=None)
    args = p.parse_args()
    meshes = [build_level("square2", int(L)) for L in args.levels.split(",")]
    for kind in ("CR", "ECR"):
        rep = expansion_report(meshes, 2 * np.pi**2, sine_mode(), kind)
        print(f"\n{kind}")
        for lv in rep.levels:
            terms = "  ".join(f"{k}={v: .3e}" for k, v in lv.terms.items())
            print(f"L{lv.level} error={lv.error:.4e} residual={lv.residual: .3e} leading={lv.leading_residual: .3e}  {terms}")
        print("residual rates", np.round(rep.rates("residual"), 2), " leading rates", np.round(rep.rates("leading_residual"), 2))
        if args.csv:
            rep.to_csv(args.csv.replace(".csv", f"_{kind.lower()}.csv"))
