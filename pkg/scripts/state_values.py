"""omega(b b+) and omega(b+ b) on [0,1) against their closed forms for several lambda and N.

Usage: python scripts/state_values.py [--lambdas 0.3,0.5,0.7] [--cutoffs 10,20,40]
"""

import argparse

from swnalg.kms import KmsConfig, state_values


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", default="0.3,0.5,0.7")
    ap.add_argument("--cutoffs", default="10,20,40")
    args = ap.parse_args()
    print(f"{'lambda':>6} {'N':>4} {'check':>12} {'value':>16} {'closed form':>12} "
          f"{'error':>10} {'tail bound':>10}")
    for lam in (float(v) for v in args.lambdas.split(",")):
        for N in (int(v) for v in args.cutoffs.split(",")):
            for r in state_values(KmsConfig(lam=lam, sl2_cutoff=N)):
                print(f"{lam:>6} {N:>4} {r.check:>12} {r.parameters['value_re']:>16.10f} "
                      f"{r.closed_form:>12.6f} {r.max_abs_error:>10.2e} "
                      f"{r.parameters['tail_bound']:>10.2e}")


if __name__ == "__main__":
    main()
