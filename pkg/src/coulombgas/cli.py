"""Command-line entry point: equilibrium, sample, exact, analyze, verify."""
from __future__ import annotations

import argparse
import glob
import logging
import math
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from . import analysis as an
from . import artifacts as art
from . import determinantal as det
from . import equilibrium as eqm
from . import sampler as smp
from .config import ConfigError, ExperimentConfig, load_config

log = logging.getLogger("coulombgas")


class MissingArtifactError(RuntimeError):
    pass


# ----------------------------------------------------------------- helpers


def _equilibrium(cfg: ExperimentConfig, workers: int = 1):
    g = cfg["grid"]
    p = cfg.base_potential()
    method = g["method"]
    grid = eqm.GridDomain.square(g["half_width"], g["resolution"])
    if method == "radial" or (method == "auto" and p.is_radial):
        _, eq = eqm.solve_radial(p, grid=grid, floor_c=cfg["analysis"]["c_fraction"])
    else:
        eq = eqm.solve_grid(p, grid, tol=g["tol"], workers=workers,
                            floor_c=cfg["analysis"]["c_fraction"])
    return eq


def _chain_id(n: int, k: int) -> str:
    return f"n{n}_c{k}"


def _chain_files(out: str):
    files = sorted(glob.glob(os.path.join(out, "chain_*.csv")))
    if not files:
        raise MissingArtifactError(
            f"no chain_*.csv in {out}; run the 'sample' subcommand first")
    return files


def _load_batches(out: str) -> dict:
    """n -> list of (dn array, configs or None)."""
    res: dict = {}
    for path in _chain_files(out):
        header, rows = art.read_csv(path)
        cid = os.path.basename(path)[len("chain_"):-len(".csv")]
        n = int(cid.split("_")[0][1:])
        dn = np.array([float(r[1]) for r in rows])
        snap = os.path.join(out, f"chain_{cid}.cgas")
        configs = art.read_snapshot(snap) if os.path.exists(snap) else None
        res.setdefault(n, []).append((dn, configs))
    return res


# -------------------------------------------------------------- subcommands


def cmd_equilibrium(cfg, out, manifest, threads):
    t0 = time.time()
    eq = _equilibrium(cfg, workers=threads)
    inv = eqm.check_invariants(eq)
    lem = eqm.exterior_floor_constants(eq, cfg["analysis"]["c_fraction"] * eq.c0)
    info = {
        "potential": eq.potential.name,
        "method": eq.method,
        "grid": {"box": list(eq.grid.box), "resolution": eq.grid.resolution, "h": eq.grid.h},
        "frostman_const": eq.frostman_const,
        "robin_const": eq.robin_const,
        "c0": eq.c0,
        "a0": eq.a0,
        "delta0": eq.delta0,
        "floor_violations": lem.violation_count,
        "radius": eq.radius,
        "residual": eq.residual,
        "iterations": eq.iterations,
        "boundary": [[[z.real, z.imag] for z in ring] for ring in eq.geometry.boundary],
        "invariants": {k: {"ok": bool(v[0]), "value": v[1]} for k, v in inv.items()},
    }
    path = os.path.join(out, "equilibrium.json")
    art.write_json(path, info)
    manifest.add(path, "equilibrium")
    z = eq.grid.centers.ravel()
    rows = zip(z.real, z.imag, eq.sigma_weights.ravel(), eq.q_check.ravel(), eq.q_eff.ravel(),
               eq.droplet_mask.ravel().astype(int))
    path = os.path.join(out, "fields.csv")
    art.write_csv(path, ["x", "y", "sigma", "q_check", "q_eff", "droplet"], rows)
    manifest.add(path, "equilibrium")
    manifest.record("equilibrium", time.time() - t0)
    bad = [k for k, v in inv.items() if not v[0]]
    if bad:
        log.warning("equilibrium invariants failed: %s", ", ".join(bad))
    return 0


def cmd_sample(cfg, out, manifest, threads):
    t0 = time.time()
    s = cfg["sampler"]
    eq = _equilibrium(cfg, workers=threads)
    seeds_info = {}
    for n in s["n"]:
        p = cfg.potential(n)
        params = smp.ChainParams(n=n, beta=cfg.beta_for(n), sweeps=s["sweeps"], burn_in=s["burn_in"],
                                 thin=s["thin"], seed=s["seed"] + n, step_scale=s["step_scale"],
                                 check_every=s["check_every"])
        batches = smp.run_chains(params, p, eq, s["chains"], threads)
        for k, b in enumerate(batches):
            cid = _chain_id(n, k)
            rows = zip(range(b.n_samples), b.dn, b.energy, b.acceptance)
            path = os.path.join(out, f"chain_{cid}.csv")
            art.write_csv(path, ["sample", "d_n", "energy", "acceptance_rate"], rows)
            manifest.add(path, "sample")
            if s["snapshots"]:
                spath = os.path.join(out, f"chain_{cid}.cgas")
                art.write_snapshot(spath, b.configs)
                manifest.add(spath, "sample")
            seeds_info[cid] = b.metadata
            for w in b.metadata["warnings"]:
                log.warning("%s: %s", cid, w)
    manifest.record("sample", time.time() - t0,
                    {"seed_derivation": "numpy SeedSequence(seed + n).spawn(chains)[k]",
                     "chains": seeds_info})
    return 0


def cmd_exact(cfg, out, manifest, threads):
    t0 = time.time()
    p = cfg.base_potential()
    if not p.is_radial:
        raise ConfigError("exact subcommand needs a radial potential")
    ex = cfg["exact"]
    c = cfg["analysis"]["c_fraction"]
    rng = np.random.default_rng(ex["seed"])
    summary = {}
    norm_rows, prof_rows, law_rows, gum_rows = [], [], [], []
    for n in ex["n"]:
        e = det.build_ensemble(p, n)
        for k, v in enumerate(e.log_norms):
            norm_rows.append((n, k, v))
        r = np.linspace(0.0, e.radius * 1.6, ex["profile_points"])
        vals = det.kernel_profile(e, r)
        delta = np.maximum(r - e.radius, 0.0)
        bound = np.where(delta > 0, n * n * np.exp(-c * e.c0 * n * delta ** 2), np.nan)
        prof_rows += [(n, ri, vi, bi) for ri, vi, bi in zip(r, vals, bound)]
        rl = np.linspace(e.radius * 0.9, e.radius * 1.3, ex["profile_points"])
        law_rows += [(n, ri, ci) for ri, ci in zip(rl, det.radius_cdf(e, rl))]
        maxr = det.sample_max_radius(e, rng, ex["draws"])
        entry = {"radius": e.radius, "c0": e.c0, "mass": det.one_point_mass(e),
                 "quad_error": e.quad_error, "median_dn": an.exact_median_dn(e)}
        try:
            gc = det.gumbel_constants(e, ex["loglog_coeff"])
            omega = det.gumbel_transform(maxr - e.radius, gc)
            ks = det.gumbel_ks(omega)
            gum_rows += [(n, i, om, ks if i == 0 else None) for i, om in enumerate(omega)]
            entry.update(gamma_n=gc.gamma_n, ks=ks, mean_max=float(maxr.mean()),
                         predicted_mean_max=gc.predicted_mean_max)
        except det.DeterminantalError as exc:
            entry["gumbel_error"] = str(exc)
        summary[str(n)] = entry
    files = {
        "norms.csv": (["n", "k", "log_h"], norm_rows),
        "kernel_profile.csv": (["n", "r", "r_n", "bound"], prof_rows),
        "radius_law.csv": (["n", "r", "cdf"], law_rows),
        "gumbel.csv": (["n", "sample", "omega", "ks"], gum_rows),
    }
    for name, (header, rows) in files.items():
        path = os.path.join(out, name)
        art.write_csv(path, header, rows)
        manifest.add(path, "exact")
    path = os.path.join(out, "exact.json")
    art.write_json(path, summary)
    manifest.add(path, "exact")
    manifest.record("exact", time.time() - t0)
    return 0


def cmd_analyze(cfg, out, manifest, threads):
    t0 = time.time()
    batches = _load_batches(out)
    a = cfg["analysis"]
    eq = _equilibrium(cfg, workers=threads)
    c = a["c_fraction"] * eq.c0
    tail_rows, conv_rows, large_rows = [], [], []
    scaling = {}
    energy = {"robin_const": eq.robin_const, "energy_continuous": an.energy_continuous(eq, threads),
              "discrete": {}, "partition": {}}
    funcs = an.builtin_test_functions()
    unknown = [f for f in a["test_functions"] if f not in funcs]
    if unknown:
        raise ConfigError(f"config field analysis/test_functions: unknown {unknown}")
    funcs = {k: funcs[k] for k in a["test_functions"]}
    for n, items in sorted(batches.items()):
        beta = cfg.beta_for(n)
        dn = np.concatenate([d for d, _ in items])
        rep = an.dn_tail(dn, n, beta, c, a["t_grid"], a["mu"], eq.c0)
        tail_rows += [row + (n,) for row in rep.rows()]
        scaling[n] = dn
        r_ok = [r for r in a["r_grid"] if r >= math.sqrt(eq.a0 / c)]
        if r_ok:
            lr = an.large_r_tail(dn, eq, r_ok, n, beta, c)
            large_rows += [(n, lr.r[i], lr.k[i], lr.bound[i], lr.count[i], lr.p_hat[i],
                            lr.ci_lo[i], bool(lr.passed[i])) for i in range(lr.r.size)]
        configs = [cf for _, cf in items if cf is not None]
        if configs:
            allc = np.concatenate(configs)
            conv = an.empirical_measure_test(allc, eq, funcs)
            conv_rows += [(n,) + row for row in conv.rows()]
            p = cfg.potential(n)
            ed = np.array([an.energy_discrete(z, p) for z in allc[:: max(1, allc.shape[0] // 2000)]])
            energy["discrete"][str(n)] = {"mean": float(ed.mean()), "std": float(ed.std())}
    for pn in a["partition_n"]:
        b = cfg["sampler"]["beta"]
        beta = float(b.get(str(pn), 1.0)) if isinstance(b, dict) else float(b)
        try:
            pr = an.partition_bruteforce(cfg.base_potential(), beta, pn, eq=eq)
            energy["partition"][str(pn)] = {"beta": beta, "log_z": pr.log_z, "scaled": pr.scaled,
                                            "rhs": pr.rhs, "bound_ok": pr.bound_ok,
                                            "nodes": list(pr.nodes)}
        except an.AnalysisError as exc:
            energy["partition"][str(pn)] = {"error": str(exc)}
    outputs = {
        "tail_report.csv": (["t", "threshold", "p_hat", "ci_lo", "ci_hi", "bound", "pass", "n"], tail_rows),
        "convergence.csv": (["n", "function", "sample_mean", "sigma", "abs_diff", "stderr", "pass"], conv_rows),
        "large_tail.csv": (["n", "r", "k", "bound", "count", "p_hat", "ci_lo", "pass"], large_rows),
    }
    if len(scaling) >= 3:
        betas = {k: cfg.beta_for(k) for k in scaling}
        sr = an.localization_scaling(scaling, betas, eq.c0, min_samples=1)
        outputs["scaling.csv"] = (["n", "beta", "median", "scale", "ratio"],
                                  list(zip(sr.n, sr.beta, sr.median, sr.scale, sr.ratio)))
    for name, (header, rows) in outputs.items():
        path = os.path.join(out, name)
        art.write_csv(path, header, rows)
        manifest.add(path, "analyze")
    decay = {}
    p = cfg.base_potential()
    if p.is_radial:
        for n in sorted(batches):
            f = an.exact_decay_fit(det.build_ensemble(p, n), tuple(a["decay_window"]))
            decay[str(n)] = {"window": f.window, "slope": f.slope, "intercept": f.intercept,
                             "c_hat": f.c_hat, "residual": f.residual, "c0": f.c0,
                             "verdict": f.verdict, "channel": "exact beta=1"}
    for name, obj in (("decay_fit.json", decay), ("energy.json", energy)):
        path = os.path.join(out, name)
        art.write_json(path, obj)
        manifest.add(path, "analyze")
    manifest.record("analyze", time.time() - t0)
    return 0


def cmd_verify(cfg, out, manifest, threads):
    from . import verify

    t0 = time.time()
    results = verify.run_suite(cfg, threads=threads)
    path = os.path.join(out, "verify.json")
    art.write_json(path, results)
    manifest.add(path, "verify")
    manifest.record("verify", time.time() - t0)
    failed = [k for k, v in results.items() if v["hard"] and not v["ok"]]
    for k, v in results.items():
        print(f"{'PASS' if v['ok'] else 'FAIL'}  {k}: {v['detail']}")
    if failed:
        print(f"{len(failed)} hard check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "sample": cmd_sample,
    "exact": cmd_exact,
    "analyze": cmd_analyze,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coulombgas", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="TOML experiment file (defaults used if omitted)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, help="override sampler.seed")
    ap.add_argument("--out", help="output directory (overrides config 'output')")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {}
    if args.seed is not None:
        overrides["sampler"] = {"seed": args.seed}
    if args.out is not None:
        overrides["output"] = args.out
    try:
        cfg = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for note in cfg.notes:
        log.info(note)
    out = cfg["output"]
    os.makedirs(out, exist_ok=True)
    manifest = art.Manifest(out, cfg.hash, __version__)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            status = COMMANDS[args.command](cfg, out, manifest, max(1, args.threads))
    except (MissingArtifactError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest.save()
    return status


if __name__ == "__main__":
    sys.exit(main())
