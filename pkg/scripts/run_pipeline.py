"""Run equilibrium, sample, exact and analyze for one config, then print a summary."""
import argparse
import os
import sys

from coulombgas import artifacts as art
from coulombgas import cli
from coulombgas.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=os.path.join(os.path.dirname(__file__), "..", "configs", "smoke.toml"))
    ap.add_argument("--out")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    extra = ["--config", args.config, "--threads", str(args.threads)]
    if args.out:
        extra += ["--out", args.out]
    for cmd in ("equilibrium", "sample", "exact", "analyze"):
        status = cli.main([cmd] + extra)
        if status != 0:
            sys.exit(status)
    out = args.out or load_config(args.config)["output"]
    header, rows = art.read_csv(os.path.join(out, "tail_report.csv"))
    fails = [r for r in rows if r[header.index("pass")] != "1"]
    print(f"tail report: {len(rows)} rows, {len(fails)} failing")
    eq = art.read_json(os.path.join(out, "equilibrium.json"))
    print(f"c0 = {eq['c0']:.4f}, robin = {eq['robin_const']:.5f}, exterior violations = {eq['floor_violations']}")


if __name__ == "__main__":
    main()
