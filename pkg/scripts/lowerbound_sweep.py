"""Certificate quantities as s^2/d grows at fixed d and M.

    python3 scripts/lowerbound_sweep.py --functional abs_pow:1 --d 1000000 --M 1
"""

import argparse
import math

import numpy as np

from addfunc.funcspace import MarginalFunctional, parse_functional
from addfunc.lowerbound import certificate

COLUMNS = ("ratio", "s", "K", "delta_ref", "chi2_bound", "tv_bound", "cantelli1", "V", "valid", "risk_lower")


def oscillating(freq):
    # hard to approximate by low-degree polynomials, so delta stays near 1
    return MarginalFunctional(lambda t: np.cos(freq * np.asarray(t, dtype=float)), f"cos{freq:g}", 1.0, is_even=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--functional", default="abs_pow:1", help="builtin spec, or cos:<freq>")
    ap.add_argument("--d", type=int, default=10**6)
    ap.add_argument("--M", type=float, default=None, help="default sqrt(log(s^2/d)) per row")
    ap.add_argument("--ratios", default="100,1000,10000")
    args = ap.parse_args()

    if args.functional.startswith("cos:"):
        F = oscillating(float(args.functional[4:]))
    else:
        F = parse_functional(args.functional)
    print(",".join(COLUMNS))
    for r in (float(v) for v in args.ratios.split(",")):
        s = int(round(math.sqrt(r * args.d)))
        cert = certificate(F, args.d, s, args.M)
        row = {"ratio": r, "s": s, **{k: getattr(cert, k) for k in COLUMNS[2:]}}
        print(",".join(str(row[k]) for k in COLUMNS))


if __name__ == "__main__":
    main()
