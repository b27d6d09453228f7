"""Metropolis sampling of the Coulomb gas Gibbs measure and per-configuration observables.

Configurations are 1-d complex arrays of particle positions. The Hamiltonian
is

    H_n = sum_{j != k} log 1/|z_j - z_k| + n_field * sum_j Q(z_j)

with the double sum over ordered pairs; the target density is exp(-beta H_n).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .potential import Potential, base_of

AUTOTUNE_TARGET = 0.3


class SamplerError(RuntimeError):
    pass


# ------------------------------------------------------------------- energies


def validate_configuration(z, box=None) -> np.ndarray:
    z = np.asarray(z, dtype=complex).ravel()
    if not np.all(np.isfinite(z)):
        raise SamplerError("configuration has non-finite points")
    if box is not None:
        inside = (z.real >= box[0]) & (z.real <= box[1]) & (z.imag >= box[2]) & (z.imag <= box[3])
        if not inside.all():
            raise SamplerError("configuration leaves the sampling box")
    return z


def pair_log_sums(z: np.ndarray) -> np.ndarray:
    """s_j = sum_{i != j} log|z_j - z_i| (-inf on coincidences)."""
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, 1.0)
    with np.errstate(divide="ignore"):
        return np.log(d).sum(axis=1)


def hamiltonian(z, p: Potential, n_field: Optional[float] = None) -> float:
    """H_n of a configuration; +inf on coincident points or infinite Q."""
    z = np.asarray(z, dtype=complex).ravel()
    n_field = z.size if n_field is None else n_field
    q = p.evaluate(z)
    if not np.all(np.isfinite(q)):
        return math.inf
    s = pair_log_sums(z)
    if np.any(np.isneginf(s)):
        return math.inf
    return float(-s.sum() + n_field * q.sum())


# ---------------------------------------------------------------- chain state


@dataclass
class ChainState:
    points: np.ndarray
    potential: Potential
    beta: float
    rng: np.random.Generator
    step_scale: float = 1.0
    n_field: Optional[float] = None
    box: tuple = (-1e3, 1e3, -1e3, 1e3)
    sums: np.ndarray = field(default=None, repr=False)
    energy: float = 0.0
    accepted: int = 0
    proposed: int = 0

    def __post_init__(self):
        self.points = validate_configuration(self.points, self.box).copy()
        if self.n_field is None:
            self.n_field = float(self.points.size)
        self.resync()

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0

    def resync(self) -> float:
        """Recompute caches from scratch; returns the relative energy drift."""
        old = self.energy
        self.sums = pair_log_sums(self.points)
        self.energy = hamiltonian(self.points, self.potential, self.n_field)
        if not math.isfinite(self.energy):
            raise SamplerError("initial configuration has infinite energy")
        return abs(old - self.energy) / max(abs(self.energy), 1.0)

    def consistency_error(self) -> float:
        """Relative gap between cached and recomputed energy and sums."""
        e = hamiltonian(self.points, self.potential, self.n_field)
        s = pair_log_sums(self.points)
        scale = max(abs(e), 1.0)
        return max(abs(e - self.energy) / scale, float(np.max(np.abs(s - self.sums))) / scale)

    @property
    def _code(self):
        return self.potential.jit_code


def move_delta(state: ChainState, j: int, z_new: complex) -> float:
    """Energy change for moving particle j to ``z_new``, O(n)."""
    z = state.points
    others = np.delete(z, j)
    d = np.abs(z_new - others)
    if np.any(d == 0):
        return math.inf
    q_new = float(state.potential.evaluate(np.array([z_new]))[0])
    q_old = float(state.potential.evaluate(np.array([z[j]]))[0])
    if not math.isfinite(q_new):
        return math.inf
    return float(-2.0 * (np.log(d).sum() - state.sums[j]) + state.n_field * (q_new - q_old))


def transition_density(state: ChainState, j: int, z_from: complex, z_to: complex) -> float:
    """Density of proposing and accepting the single move z_from -> z_to for particle j."""
    sigma = state.step_scale / math.sqrt(state.n)
    prop = math.exp(-abs(z_to - z_from) ** 2 / (2 * sigma * sigma)) / (2 * math.pi * sigma * sigma)
    saved = state.points[j], state.sums.copy(), state.energy
    state.points[j] = z_from
    state.resync()
    dh = move_delta(state, j, z_to)
    state.points[j], state.sums, state.energy = saved
    return prop * min(1.0, math.exp(-state.beta * dh)) if math.isfinite(dh) else 0.0


def _python_sweeps(state: ChainState, normals, uniforms, thin, out, start_row):
    """Reference sweep loop for potentials without a compiled code."""
    z = state.points
    n = z.size
    step = state.step_scale / math.sqrt(n)
    box = state.box
    row = start_row
    for s in range(normals.shape[0]):
        for j in range(n):
            zn = z[j] + step * complex(normals[s, j, 0], normals[s, j, 1])
            state.proposed += 1
            if not (box[0] <= zn.real <= box[1] and box[2] <= zn.imag <= box[3]):
                continue
            dh = move_delta(state, j, zn)
            if not dh < math.inf:
                continue
            if dh > 0 and math.log(uniforms[s, j]) >= -state.beta * dh:
                continue
            with np.errstate(divide="ignore"):
                new_logs = np.log(np.abs(zn - z))
                old_logs = np.log(np.abs(z[j] - z))
            new_logs[j] = old_logs[j] = 0.0
            state.sums += new_logs - old_logs
            state.sums[j] = new_logs.sum()
            z[j] = zn
            state.energy += dh
            state.accepted += 1
        if out is not None and thin > 0 and (s + 1) % thin == 0 and row < out[0].shape[0]:
            out[0][row] = z
            out[1][row] = state.energy
            out[2][row] = state.acceptance_rate
            row += 1
    return row


def _advance(state: ChainState, n_sweeps: int, thin: int = 0, out=None, start_row: int = 0) -> int:
    """Run sweeps drawing randomness from the state's generator; returns next free row."""
    n = state.n
    normals = state.rng.standard_normal((n_sweeps, n, 2))
    uniforms = state.rng.random((n_sweeps, n))
    code = state._code
    if code is None:
        return _python_sweeps(state, normals, uniforms, thin, out, start_row)
    xs = np.ascontiguousarray(state.points.real)
    ys = np.ascontiguousarray(state.points.imag)
    if out is None:
        ox = oy = np.zeros((0, n))
        oe = oa = np.zeros(0)
    else:
        m = out[0].shape[0] - start_row
        ox, oy = np.zeros((m, n)), np.zeros((m, n))
        oe, oa = np.zeros(m), np.zeros(m)
    step = state.step_scale / math.sqrt(n)
    energy, acc, prop, rows = _kernels.run_sweeps(
        xs, ys, state.sums, state.energy, code, float(state.n_field), float(state.beta), step,
        np.asarray(state.box, dtype=float), normals, uniforms, thin if out is not None else 0,
        ox, oy, oe, oa, state.accepted, state.proposed)
    state.points = xs + 1j * ys
    state.energy = energy
    state.accepted += acc
    state.proposed += prop
    if out is not None and rows:
        out[0][start_row:start_row + rows] = ox[:rows] + 1j * oy[:rows]
        out[1][start_row:start_row + rows] = oe[:rows]
        out[2][start_row:start_row + rows] = oa[:rows]
    return start_row + rows


def metropolis_sweep(state: ChainState, p: Optional[Potential] = None) -> ChainState:
    """n single-particle Gaussian proposals (std step_scale/sqrt(n)), Metropolis accepted."""
    if p is not None and p is not state.potential:
        state.potential = p
        state.resync()
    _advance(state, 1)
    return state


# ----------------------------------------------------------------- chain runs


@dataclass(frozen=True)
class ChainParams:
    n: int
    beta: float
    sweeps: int = 10_000
    burn_in: int = 1_000
    thin: int = 1
    seed: int = 0
    step_scale: float = 1.0
    check_every: int = 1_000
    tune_window: int = 50
    box: Optional[tuple] = None
    n_field: Optional[float] = None
    init: str = "equilibrium"


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Thinned chain output. Metadata reproduces the batch exactly."""

    configs: np.ndarray
    dn: np.ndarray
    energy: np.ndarray
    acceptance: np.ndarray
    metadata: dict

    @property
    def n_samples(self) -> int:
        return self.configs.shape[0]


def chain_seeds(master_seed: int, n_chains: int) -> list:
    """Per-chain seed sequences; chain k uses spawn key (k,) of the master."""
    return np.random.SeedSequence(master_seed).spawn(n_chains)


def initial_configuration(n: int, eq, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from the equilibrium measure.

    Radial droplets: inverse CDF of the radial mass r Q'(r)/2. Otherwise
    cells are drawn by weight and the point is uniform within the cell.
    """
    p = base_of(eq.potential)
    if eq.radius is not None and p.radial_derivative is not None:
        from scipy import optimize

        u = rng.random(n)
        theta = 2 * np.pi * rng.random(n)
        mass = lambda r: 0.5 * r * float(p.radial_derivative(np.array(r)))
        r = np.array([optimize.brentq(lambda t: mass(t) - ui, 0.0, eq.radius, xtol=1e-13)
                      if ui > 0 else 0.0 for ui in u])
        return r * np.exp(1j * theta)
    w = eq.sigma_weights.ravel()
    cells = rng.choice(w.size, size=n, p=w / w.sum())
    jitter = (rng.random(n) - 0.5 + 1j * (rng.random(n) - 0.5)) * eq.grid.h
    return eq.grid.centers.ravel()[cells] + jitter


def default_box(eq) -> tuple:
    pts = eq.geometry.boundary_points()
    r = float(np.max(np.abs(pts))) if pts.size else 1.0
    half = 10.0 * r + 10.0
    return (-half, half, -half, half)


def run_chain(params: ChainParams, p: Potential, eq, seed_seq=None) -> SampleBatch:
    """Burn in (with step-size tuning), then record every ``thin`` sweeps."""
    ss = seed_seq if seed_seq is not None else np.random.SeedSequence(params.seed)
    rng = np.random.default_rng(ss)
    box = params.box or default_box(eq)
    if params.init == "equilibrium":
        z0 = initial_configuration(params.n, eq, rng)
    else:
        raise SamplerError(f"unknown init {params.init!r}")
    state = ChainState(z0, p, params.beta, rng, params.step_scale, params.n_field, box)

    # burn-in with Robbins-Monro tuning of log(step_scale); frozen afterwards
    done = 0
    k = 0
    while done < params.burn_in:
        m = min(params.tune_window, params.burn_in - done)
        a0, p0 = state.accepted, state.proposed
        _advance(state, m)
        rate = (state.accepted - a0) / max(state.proposed - p0, 1)
        k += 1
        state.step_scale *= math.exp((rate - AUTOTUNE_TARGET) / math.sqrt(k))
        done += m
    tuned_scale = state.step_scale
    state.accepted = state.proposed = 0

    n_rows = params.sweeps // params.thin if params.thin > 0 else 0
    configs = np.zeros((n_rows, params.n), dtype=complex)
    energy = np.zeros(n_rows)
    acc = np.zeros(n_rows)
    out = (configs, energy, acc)
    row = 0
    done = 0
    max_drift = 0.0
    block = max(params.thin, (params.check_every // params.thin) * params.thin or params.thin)
    while done < params.sweeps:
        m = min(block, params.sweeps - done)
        row = _advance(state, m, params.thin, out, row)
        done += m
        err = state.consistency_error()
        max_drift = max(max_drift, err)
        if err > 1e-9:
            raise SamplerError(f"energy cache drifted by {err:.3g}")
        state.resync()

    warn = []
    rate = state.acceptance_rate
    if not 0.1 <= rate <= 0.7:
        warn.append(f"acceptance rate {rate:.3f} outside [0.1, 0.7]")
    dn = eq.geometry.distance(configs).max(axis=1) if n_rows else np.zeros(0)
    meta = {
        "n": params.n, "beta": params.beta, "potential": p.name,
        "seed": params.seed, "spawn_key": list(ss.spawn_key), "entropy": str(ss.entropy),
        "sweeps": params.sweeps, "burn_in": params.burn_in, "thin": params.thin,
        "step_scale": tuned_scale, "acceptance_rate": rate, "max_energy_drift": max_drift,
        "box": list(box), "warnings": warn,
    }
    for w in warn:
        warnings.warn(w, stacklevel=2)
    return SampleBatch(configs, dn, energy, acc, meta)


def run_chains(params: ChainParams, p: Potential, eq, n_chains: int, threads: int = 1) -> list:
    """Independent chains with streams split from ``params.seed``."""
    seeds = chain_seeds(params.seed, n_chains)
    if threads <= 1 or n_chains == 1:
        return [run_chain(params, p, eq, s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda s: run_chain(params, p, eq, s), seeds))


def regime_ratio(n: int, beta: float) -> float:
    """beta n / log n; the localization regime needs this to grow."""
    return beta * n / math.log(n) if n > 1 else math.inf


# ------------------------------------------------------- Lagrange polynomials


def log_lagrange(z, j: int, zeta, p: Potential, beta: float, n_field: Optional[float] = None) -> np.ndarray:
    """log |l_j(zeta)|^(2 beta) for the weighted Lagrange polynomial of configuration z."""
    z = np.asarray(z, dtype=complex).ravel()
    n_field = z.size if n_field is None else n_field
    zeta = np.asarray(zeta, dtype=complex)
    zj = z[j]
    others = np.delete(z, j)
    with np.errstate(divide="ignore"):
        num = np.log(np.abs(zeta[..., None] - others))
    den = np.log(np.abs(zj - others))
    terms = (num - den).sum(axis=-1)
    qdiff = p.evaluate(zeta) - p.evaluate(np.array([zj]))[0]
    return 2 * beta * (terms - 0.5 * n_field * qdiff)


def eval_lagrange(z, j: int, zeta, p: Potential, beta: float, n_field: Optional[float] = None) -> np.ndarray:
    """|l_j(zeta)|^(2 beta); exactly 1 at z_j and 0 at the other points."""
    return np.exp(log_lagrange(z, j, zeta, p, beta, n_field))


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    @property
    def area(self) -> float:
        """dA-measure."""
        return self.radius ** 2

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius

    def nodes(self, m: int):
        """Polar Gauss-Legendre x trapezoid nodes and dA weights."""
        x, wx = np.polynomial.legendre.leggauss(m)
        r = 0.5 * self.radius * (x + 1)
        wr = 0.5 * self.radius * wx * r
        t = 2 * np.pi * np.arange(2 * m) / (2 * m)
        z = self.center + r[:, None] * np.exp(1j * t)[None, :]
        w = (wr[:, None] * np.full(2 * m, 2 * np.pi / (2 * m))[None, :]) / np.pi
        return z.ravel(), w.ravel()


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0) / math.pi

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        return (z.real >= self.x0) & (z.real < self.x1) & (z.imag >= self.y0) & (z.imag < self.y1)

    def nodes(self, m: int):
        x, wx = np.polynomial.legendre.leggauss(m)
        xs = self.x0 + 0.5 * (self.x1 - self.x0) * (x + 1)
        ys = self.y0 + 0.5 * (self.y1 - self.y0) * (x + 1)
        w = np.outer(wx * 0.5 * (self.x1 - self.x0), wx * 0.5 * (self.y1 - self.y0)) / math.pi
        return (xs[:, None] + 1j * ys[None, :]).ravel(), w.ravel()


def lagrange_functional(z, j: int, region, p: Potential, beta: float, nodes: int = 24,
                        rtol: float = 1e-6, n_field: Optional[float] = None) -> float:
    """Y_{j,W} = integral over W of |l_j|^(2 beta) dA, refined until stable."""
    if region.area == 0:
        return 0.0
    prev = None
    m = nodes
    for _ in range(6):
        pts, wts = region.nodes(m)
        val = float(np.sum(wts * eval_lagrange(z, j, pts, p, beta, n_field)))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        m *= 2
    raise SamplerError(f"quadrature did not converge (last change {abs(val - prev):.3g})")


def lagrange_functional_batch(configs: np.ndarray, j: int, region, p: Potential, beta: float,
                              nodes: int = 24, n_field: Optional[float] = None) -> np.ndarray:
    """Y_{j,W} for many configurations on a fixed quadrature rule."""
    configs = np.atleast_2d(configs)
    n = configs.shape[1]
    n_field = n if n_field is None else n_field
    pts, wts = region.nodes(nodes)
    out = np.empty(configs.shape[0])
    q_pts = p.evaluate(pts)
    for start in range(0, configs.shape[0], 512):
        c = configs[start:start + 512]
        zj = c[:, j]
        others = np.delete(c, j, axis=1)
        with np.errstate(divide="ignore"):
            num = np.log(np.abs(pts[None, :, None] - others[:, None, :])).sum(axis=-1)
        den = np.log(np.abs(zj[:, None] - others)).sum(axis=-1)
        logv = 2 * beta * (num - den[:, None] - 0.5 * n_field * (q_pts[None, :] - p.evaluate(zj)[:, None]))
        out[start:start + 512] = np.exp(logv) @ wts
    return out


def lagrange_pair_functional_batch(configs: np.ndarray, j: int, k: int, region_j, region_k,
                                   p: Potential, beta: float, nodes: int = 16,
                                   sequential: bool = True, n_field: Optional[float] = None) -> np.ndarray:
    """Two-index functional over W_j x W_k.

    With ``sequential=True`` the second Lagrange polynomial is built from the
    configuration in which z_j has already been moved to the first
    integration variable, which is the form whose expectation equals
    |U_1||U_2| P(z_j in W_1, z_k in W_2). ``sequential=False`` gives the
    plain product Y_{j,W1} Y_{k,W2} of the original configuration.
    """
    configs = np.atleast_2d(configs)
    n = configs.shape[1]
    n_field = n if n_field is None else n_field
    if not sequential:
        return (lagrange_functional_batch(configs, j, region_j, p, beta, nodes, n_field)
                * lagrange_functional_batch(configs, k, region_k, p, beta, nodes, n_field))
    pj, wj = region_j.nodes(nodes)
    pk, wk = region_k.nodes(nodes)
    qj, qk = p.evaluate(pj), p.evaluate(pk)
    rest = [i for i in range(n) if i not in (j, k)]
    out = np.empty(configs.shape[0])
    for s, c in enumerate(configs):
        zj, zk, zr = c[j], c[k], c[rest]
        qzj, qzk = p.evaluate(np.array([zj, zk]))
        # l_j(zeta) on the original configuration
        lj = (np.log(np.abs(pj[:, None] - zr)).sum(-1) + np.log(np.abs(pj - zk))
              - np.log(np.abs(zj - zr)).sum() - math.log(abs(zj - zk)) - 0.5 * n_field * (qj - qzj))
        # l_k(eta) with z_j replaced by zeta
        with np.errstate(divide="ignore"):
            lk = (np.log(np.abs(pk[None, :, None] - zr)).sum(-1) + np.log(np.abs(pk[None, :] - pj[:, None]))
                  - np.log(np.abs(zk - zr)).sum() - np.log(np.abs(zk - pj))[:, None]
                  - 0.5 * n_field * (qk[None, :] - qzk))
        vals = np.exp(2 * beta * (lj[:, None] + lk))
        out[s] = wj @ vals @ wk
    return out
