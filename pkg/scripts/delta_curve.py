"""delta_{K,M}(|t|^gamma) for a range of K, with the log-log slope.

    python3 scripts/delta_curve.py --gamma 0.5 --kmin 5 --kmax 40
"""

import argparse

from addfunc.funcspace import builtin_functional
from addfunc.polyapprox import delta_curve, loglog_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--M", type=float, default=1.0)
    ap.add_argument("--kmin", type=int, default=5)
    ap.add_argument("--kmax", type=int, default=40)
    args = ap.parse_args()

    F = builtin_functional("abs_pow", [args.gamma])
    curve = delta_curve(F, range(args.kmin, args.kmax + 1), args.M)
    print("K,delta,K*delta")
    for K, d in curve:
        print(f"{K},{d!r},{K * d!r}")
    print(f"# slope = {loglog_slope(curve):.4f} (expected about -{args.gamma:g})")


if __name__ == "__main__":
    main()
