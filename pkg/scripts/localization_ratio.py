"""Median D_n relative to sqrt(log n / n) for Q = |z|^2 at beta = 1, from the exact radius law.

The ratio approaches the sharp constant 1/2 only logarithmically; this
prints it over a wide range of n.
"""
import argparse

import numpy as np

from coulombgas import analysis as an
from coulombgas import determinantal as det
from coulombgas import potential as pot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[64, 256, 1024, 4096, 16384, 65536])
    args = ap.parse_args()
    meds = [an.exact_median_dn(det.build_ensemble(pot.ginibre(), n)) for n in args.n]
    sr = an.scaling_from_medians(np.array(args.n), 1.0, meds, 1.0)
    print("n, median_dn, scale, ratio")
    for row in zip(sr.n, sr.median, sr.scale, sr.ratio):
        print("{}, {:.6f}, {:.6f}, {:.4f}".format(*row))
    print(f"sharp constant {sr.sharp_constant:.3f}, trend d(ratio)/d(log n) = {sr.trend:.4f}")


if __name__ == "__main__":
    main()
