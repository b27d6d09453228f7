"""Monte Carlo check of the one- and two-index Lagrange identities for small gases.

Runs one long chain per (n, seed) and prints the z-scores of both
identities with disc regions.
"""
import argparse
import time

from coulombgas import analysis as an
from coulombgas import equilibrium as eqm
from coulombgas import potential as pot
from coulombgas import sampler as smp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--beta", type=float, default=1.5)
    ap.add_argument("--sweeps", type=int, default=1_000_000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[3, 4, 5])
    args = ap.parse_args()
    p = pot.ginibre()
    _, eq = eqm.solve_radial(p)
    u, w = smp.Disc(-0.3 + 0j, 0.5), smp.Disc(0.3 + 0.2j, 0.5)
    u1, u2 = smp.Disc(-0.45 + 0j, 0.35), smp.Disc(0.45 + 0j, 0.35)
    w1, w2 = smp.Disc(0.3j, 0.5), smp.Disc(-0.3j, 0.5)
    print("seed, n, identity, lhs, rhs, z, seconds")
    for seed in args.seeds:
        for n in args.n:
            b = smp.run_chain(smp.ChainParams(n=n, beta=args.beta, sweeps=args.sweeps, seed=seed), p, eq)
            for name, fn in (("one-index", lambda: an.one_index_identity(b.configs, None, u, w, p, args.beta)),
                             ("two-index", lambda: an.two_index_identity(b.configs, None, None, u1, u2,
                                                                         w1, w2, p, args.beta))):
                t0 = time.time()
                c = fn()
                print(f"{seed}, {n}, {name}, {c.lhs:.6f}, {c.rhs:.6f}, {c.z_score:.2f}, "
                      f"{time.time() - t0:.1f}")


if __name__ == "__main__":
    main()
