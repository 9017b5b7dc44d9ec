#!/usr/bin/env python3
"""Scan a family of collapsing tubes for size-relation failures and
print the ambient scalar-curvature values driving the collapse."""

import argparse
import json
import sys

from stablesurf import surfaces, tubes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", default="1.0,0.1,0.01,0.001")
    ap.add_argument("--level", type=int, default=4)
    ap.add_argument("--A0", type=float, default=0.5)
    ap.add_argument("--L0", type=float, default=2.0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    eps_values = [float(x) for x in args.eps.split(",")]
    fam = [surfaces.generate("yang_tube", args.level, eps=e, n_theta=32).mesh
           for e in eps_values]
    res = tubes.ncfd_scan(fam, A0=args.A0, L0=args.L0)

    print(f"{'eps':>10} {'l1':>12} {'verdict':>16} {'R(0)':>12}")
    for e, member in zip(eps_values, res["members"]):
        scalar = surfaces.yang_ambient_scalar(0.0, e)
        print(f"{e:>10g} {member['hypotheses']['l1']:>12.4e} "
              f"{member['verdict']:>16} {scalar:>12.4g}")
    flagged = [eps_values[i] for i in res["flagged_indices"]]
    print(f"flagged eps: {flagged}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump(res, f, indent=2, sort_keys=True, default=str)
            f.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
