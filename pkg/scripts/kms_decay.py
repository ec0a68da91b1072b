"""KMS residual against the sl2 cutoff N, next to the lambda^N regression bound.

Usage: python scripts/kms_decay.py [--lambda 0.5] [--cutoffs 8,12,16,20,30,40] [--json out.json]
"""

import argparse
import json
import time

from swnalg.kms import KmsConfig, kms_regression_bound, kms_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambda", dest="lam", type=float, default=0.5)
    ap.add_argument("--cutoffs", default="8,12,16,20,30,40")
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args()
    rows = []
    print(f"{'N':>4} {'max primary':>12} {'max secondary':>14} {'bound':>10} {'seconds':>8}")
    for N in (int(v) for v in args.cutoffs.split(",")):
        t0 = time.perf_counter()
        reps = kms_suite(KmsConfig(lam=args.lam, sl2_cutoff=N))
        row = {"N": N, "primary": max(r.parameters["primary"] for r in reps),
               "secondary": max(r.parameters["secondary"] for r in reps),
               "bound": kms_regression_bound(args.lam, N), "seconds": time.perf_counter() - t0}
        rows.append(row)
        print(f"{N:>4} {row['primary']:>12.3e} {row['secondary']:>14.3e} {row['bound']:>10.2e} "
              f"{row['seconds']:>8.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"lambda": args.lam, "rows": rows}, fh, indent=1)


if __name__ == "__main__":
    main()
