"""Aggregated property suite behind the ``verify`` subcommand.

Each check returns ``(ok, detail)``. Hard checks decide the exit status;
soft checks report asymptotic agreement that finite n need not reach.
"""
from __future__ import annotations

import math
import time

import numpy as np
from scipy import special

from . import analysis as an
from . import determinantal as det
from . import equilibrium as eqm
from . import potential as pot
from . import sampler as smp


def _equilibrium(cfg, threads):
    g = cfg["grid"]
    grid = eqm.GridDomain.square(g["half_width"], g["resolution"])
    return eqm.solve_grid(cfg.base_potential(), grid, tol=g["tol"], workers=threads,
                          floor_c=cfg["analysis"]["c_fraction"])


def check_equilibrium(cfg, threads, ctx):
    eq = ctx["eq"]
    inv = eqm.check_invariants(eq)
    bad = [k for k, v in inv.items() if not v[0]]
    detail = f"c0={eq.c0:.4f} gamma={eq.frostman_const:.5f} robin={eq.robin_const:.5f}"
    p = eq.potential
    if p.is_radial:
        R, ref = eqm.solve_radial(p, grid=eq.grid)
        haus = eq.geometry.hausdorff_to(lambda t: R * np.exp(2j * np.pi * t))
        detail += f" hausdorff={haus:.4f}"
        if haus > 2 * eq.grid.h:
            bad.append("hausdorff")
        for name, got, want, tol in (("c0", eq.c0, ref.c0, 0.02),
                                     ("frostman", eq.frostman_const, ref.frostman_const, 0.01),
                                     ("robin", eq.robin_const, ref.robin_const, 0.01)):
            if abs(got - want) > tol:
                bad.append(name)
    if bad:
        detail += " failed: " + ",".join(bad)
    return not bad, detail


def check_floor(cfg, threads, ctx):
    c = cfg["analysis"]["c_fraction"]
    out = []
    ok = True
    eqs = {cfg.base_potential().name: ctx["eq"]}
    for p in (pot.ginibre(), pot.power(2.0), pot.elliptic(0.5)):
        if p.name in eqs:
            continue
        if p.is_radial:
            _, eqs[p.name] = eqm.solve_radial(p)
        else:
            eqs[p.name] = eqm.solve_grid(p, eqm.GridDomain.square(2.0, 256), workers=threads)
    for name, eq in eqs.items():
        lem = eqm.exterior_floor_constants(eq, c * eq.c0)
        ok &= lem.violation_count == 0
        out.append(f"{name}:{lem.violation_count}")
    return ok, "violations " + " ".join(out)


def check_normalization(cfg, threads, ctx):
    worst_mass = 0.0
    worst_norm = 0.0
    for p in (pot.ginibre(), pot.power(2.0)):
        for n in (8, 64, 256):
            e = det.build_ensemble(p, n)
            worst_mass = max(worst_mass, abs(det.one_point_mass(e) - n))
            if p.name == "ginibre":
                k = np.arange(n)
                ref = special.gammaln(k + 1) - (k + 1) * math.log(n)
                worst_norm = max(worst_norm, float(np.max(np.abs(e.log_norms - ref))))
    return worst_mass <= 1e-6 and worst_norm <= 1e-8, \
        f"mass error {worst_mass:.2e}, log h_k error {worst_norm:.2e}"


def check_polynomials(cfg, threads, ctx):
    rng = np.random.default_rng(cfg["sampler"]["seed"])
    _, eq = eqm.solve_radial(pot.ginibre())
    mp = det.maximum_principle_check(eq, 32, rng)
    pb = det.pointwise_bound_check(eq, 32, 1.0, rng)
    return mp.ok and pb.ok, f"maximum principle {mp.violations}/{mp.trials}, " \
                            f"pointwise bound {pb.violations}/{pb.trials}"


def check_sampler(cfg, threads, ctx):
    eq = ctx["eq"]
    p = cfg.potential(16)
    params = smp.ChainParams(n=16, beta=1.0, sweeps=2000, burn_in=200,
                             seed=cfg["sampler"]["seed"], check_every=100)
    a = smp.run_chain(params, p, eq)
    b = smp.run_chain(params, p, eq)
    same = np.array_equal(a.configs, b.configs) and np.array_equal(a.energy, b.energy)
    drift = a.metadata["max_energy_drift"]
    # detailed balance for a random pair of configurations differing in one particle
    rng = np.random.default_rng(1)
    st = smp.ChainState(a.configs[-1].copy(), p, 1.0, rng, a.metadata["step_scale"])
    z_old = st.points[3]
    z_new = z_old + 0.05 * (rng.standard_normal() + 1j * rng.standard_normal())
    d_h = smp.move_delta(st, 3, z_new)
    fwd = smp.transition_density(st, 3, z_old, z_new)
    rev = smp.transition_density(st, 3, z_new, z_old)
    balance = abs(math.log(fwd) - math.log(rev) - (-st.beta * d_h))
    ok = same and drift <= 1e-9 and balance <= 1e-9
    return ok, f"deterministic={same} drift={drift:.1e} balance={balance:.1e}"


def check_partition(cfg, threads, ctx):
    _, eq = eqm.solve_radial(pot.ginibre())
    r1 = an.partition_bruteforce(pot.ginibre(), 1.0, 2, eq=eq)
    r2 = an.partition_bruteforce(pot.ginibre(), 2.0, 2, eq=eq)
    err = abs(r1.log_z + math.log(4))
    ok = err <= 1e-4 and r1.bound_ok and r2.bound_ok
    return ok, f"log Z_2 + log 4 = {err:.1e}; bound {r1.bound_ok}/{r2.bound_ok}"


def check_decay(cfg, threads, ctx):
    e = det.build_ensemble(pot.ginibre(), 128)
    f = an.exact_decay_fit(e, tuple(cfg["analysis"]["decay_window"]))
    ok = 1.8 * f.c0 <= f.c_hat <= 2.2 * f.c0
    return ok, f"c_hat/c0 = {f.c_hat / f.c0:.3f} (target [1.8, 2.2])"


def check_scaling(cfg, threads, ctx):
    ns = np.array([64, 256, 1024])
    med = [an.exact_median_dn(det.build_ensemble(pot.ginibre(), int(n))) for n in ns]
    sr = an.scaling_from_medians(ns, 1.0, med, 1.0)
    ok = bool(np.all((sr.ratio >= 0.3) & (sr.ratio <= 1.0)))
    return ok, "rho_n = " + ", ".join(f"{r:.3f}" for r in sr.ratio)


CHECKS = {
    "equilibrium_invariants": (check_equilibrium, True),
    "exterior_floor": (check_floor, True),
    "determinantal_normalization": (check_normalization, True),
    "weighted_polynomials": (check_polynomials, True),
    "sampler_contract": (check_sampler, True),
    "partition_two_particles": (check_partition, True),
    "decay_rate_exact": (check_decay, False),
    "localization_ratio_exact": (check_scaling, False),
}


def run_suite(cfg, threads: int = 1, only=None) -> dict:
    """Run every check; failures inside a check are recorded, not raised."""
    ctx = {"eq": _equilibrium(cfg, threads)}
    results = {}
    for name, (fn, hard) in CHECKS.items():
        if only is not None and name not in only:
            continue
        t0 = time.time()
        try:
            ok, detail = fn(cfg, threads, ctx)
        except Exception as exc:  # reported as a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results[name] = {"ok": bool(ok), "hard": hard, "detail": detail,
                         "seconds": round(time.time() - t0, 2)}
    return results
