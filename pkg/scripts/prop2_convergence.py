"""Dense conjugation residual for the type (B) flow as the particle cutoff P grows.

The comparison states are held at one particle while P increases, so the
only thing that changes is how much of exp(i eps H) survives the cutoff.
The last line repeats the acceptance setting (N = 3, two cells, P = 2).

Usage: python scripts/prop2_convergence.py [--max-P 4] [--epsilons 0.1,0.5]
"""

import argparse

from swnalg.kcell import Grid
from swnalg.kms import KmsConfig
from swnalg.repdyn import RepConfig, check_prop2, check_prop2_generator
from swnalg.sl2gns import build_gns
from swnalg.suites import prop2_setup
from swnalg.swnlie import AlgebraParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-P", type=int, default=4, help="largest P; the dense guard stops at 1000 basis states")
    ap.add_argument("--epsilons", default="0.1,0.5")
    args = ap.parse_args()
    eps = [float(v) for v in args.epsilons.split(",")]
    g = Grid(0.5, 1)
    alpha, psi = g.constant(1.0), g.constant(1.0)
    print("one cell, N = 2, no padding (one-particle dimension 9), probes with <= 1 particle")
    print(f"{'P':>3} {'basis':>6} " + " ".join(f"{'eps=' + str(e):>12}" for e in eps))
    for P in range(2, args.max_P + 1):
        cfg = RepConfig(g, build_gns(0.5, 2, pad=0), AlgebraParams(), cutoff=P)
        res = [check_prop2(cfg, alpha, e, psi, probe_particles=1) for e in eps]
        print(f"{P:>3} {res[0].detail['basis_size']:>6} "
              + " ".join(f"{r.max_residual:>12.3e}" for r in res))
    cfg = KmsConfig(sl2_cutoff=3, particle_cutoff=2)
    rc, alpha, psi = prop2_setup(cfg)
    res = [check_prop2(rc, alpha, e, psi) for e in eps]
    gen = check_prop2_generator(RepConfig(rc.grid, rc.gns, rc.params, 4), alpha, psi)
    print("acceptance setting N = 3, two cells, P = 2: "
          + ", ".join(f"eps={e}: {r.max_residual:.3e}" for e, r in zip(eps, res)))
    print(f"generator identity [H, pi(b+)] = pi(b+ alpha psi) at P = 4: {gen.max_residual:.2e}")


if __name__ == "__main__":
    main()
