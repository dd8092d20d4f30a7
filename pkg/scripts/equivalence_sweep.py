"""Sweep the claimed constant around its true value and record which characterizations fail.

For each scale s the SMOOTH family is checked at L = s * L_true and the STRONG
family at mu = mu_true / s.  Every member's worst margin goes to one CSV row,
so the plot of margin vs. s shows all ten members changing sign together at s = 1.

    python scripts/equivalence_sweep.py --function quadratic:diag:1,4 > sweep.csv
"""
import argparse
import csv
import sys

import numpy as np

from convexcert.certify import Family, check_family
from convexcert.linalg import SampleCloud
from convexcert.objectives import parse_function_spec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--function", default="quadratic:diag:1,4")
    ap.add_argument("--pairs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--scales", default="0.8,0.9,0.95,0.99,1.0,1.01,1.1")
    args = ap.parse_args(argv)

    f = parse_function_spec(args.function)
    L, mu = f.meta.L_true, f.meta.mu_true
    if L is None or not mu:
        sys.exit(f"{f.name} needs known L and mu > 0 in its metadata")
    cloud = SampleCloud.default(f.dim, seed=args.seed, pairs=args.pairs)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["scale", "family", "condition", "constant", "status", "worst_margin"])
    for s in (float(v) for v in args.scales.split(",")):
        for family, consts in ((Family.SMOOTH, {"L": s * L}), (Family.STRONG, {"mu": mu / s})):
            for rep in check_family(f, family, consts, cloud):
                value = next(iter(rep.constants.values()))
                margin = rep.worst_margin if np.isfinite(rep.worst_margin) else ""
                w.writerow([s, family.value, rep.condition.value, repr(value), rep.status,
                            repr(margin) if margin != "" else ""])


if __name__ == "__main__":
    main()
