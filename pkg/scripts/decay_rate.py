"""Fitted exterior decay rate of the exact one-point function against n and window.

-log R_n(R + delta) is regressed on delta^2; c_hat = slope / n is compared
with c0 for several fitting windows.
"""
import argparse

from coulombgas import analysis as an
from coulombgas import determinantal as det
from coulombgas import potential as pot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[32, 128, 512, 2048])
    ap.add_argument("--potential", choices=["ginibre", "power2"], default="ginibre")
    args = ap.parse_args()
    p = pot.ginibre() if args.potential == "ginibre" else pot.power(2.0)
    windows = [(0.02, 0.08), (0.05, 0.15), (0.1, 0.3)]
    print("n, window, c_hat/c0, residual")
    for n in args.n:
        e = det.build_ensemble(p, n)
        for w in windows:
            f = an.exact_decay_fit(e, w)
            print(f"{n}, {w}, {f.c_hat / f.c0:.3f}, {f.residual:.2e}")


if __name__ == "__main__":
    main()
