"""Statistics on samples and exact ensembles: tail bounds, scaling, decay fits,
empirical-measure tests, energies and brute-force partition functions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special, stats

from .equilibrium import EquilibriumResult, effective_potential
from .potential import Potential, base_of


class AnalysisError(ValueError):
    pass


# ------------------------------------------------------------------ diagnostics


def blocked_standard_error(x, n_blocks: int = 50) -> float:
    """Standard error of the mean from means of contiguous blocks."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        return math.nan
    b = min(n_blocks, x.size)
    size = x.size // b
    means = x[:b * size].reshape(b, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(b))


def split_rhat(chains) -> float:
    """Split-chain potential scale reduction factor.

    ``chains`` is a sequence of equal-length 1-d arrays (one per chain).
    """
    arr = np.asarray([np.asarray(c, dtype=float) for c in chains])
    if arr.ndim != 2 or arr.shape[1] < 4:
        raise AnalysisError("need at least one chain with >= 4 draws")
    half = arr.shape[1] // 2
    parts = np.concatenate([arr[:, :half], arr[:, half:2 * half]], axis=0)
    m, n = parts.shape
    w = parts.var(axis=1, ddof=1).mean()
    b = n * parts.mean(axis=1).var(ddof=1)
    if w == 0:
        return 1.0 if b == 0 else math.inf
    var_plus = (n - 1) / n * w + b / n
    return float(math.sqrt(var_plus / w))


def wilson_interval(k: int, n: int, level: float = 0.95):
    if n == 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


# -------------------------------------------------------------------- D_n tails


def tail_threshold(n: int, beta: float, c: float, mu, t) -> np.ndarray:
    """sqrt((log n + mu + t) / (c beta n))."""
    t = np.asarray(t, dtype=float)
    return np.sqrt((math.log(n) + mu + t) / (c * beta * n))


@dataclass(frozen=True)
class TailReport:
    n: int
    beta: float
    c: float
    mu: float
    t: np.ndarray
    threshold: np.ndarray
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bound: np.ndarray
    passed: np.ndarray
    samples: int
    cap_note: str = ""
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passed))

    def rows(self):
        for i in range(self.t.size):
            yield (self.t[i], self.threshold[i], self.p_hat[i], self.ci_lo[i], self.ci_hi[i],
                   self.bound[i], bool(self.passed[i]))


def dn_tail(dn, n: int, beta: float, c: float, t_grid, mu: float = 0.0,
            c0: Optional[float] = None, level: float = 0.95, min_expected: float = 5.0) -> TailReport:
    """Empirical P(D_n > threshold(t)) against the bound e^{-2t}.

    A grid point fails only when the lower Wilson limit exceeds the bound.
    Points where the bound predicts fewer than ``min_expected`` exceedances
    are dropped with a warning.
    """
    if c0 is not None and not c < c0:
        raise AnalysisError(f"c = {c} must be below c0 = {c0}")
    if mu < 0:
        raise AnalysisError("mu must be nonnegative")
    dn = np.asarray(dn, dtype=float)
    t = np.sort(np.asarray(t_grid, dtype=float))
    notes = []
    keep = dn.size * np.exp(-2 * t) >= min_expected
    if not keep.all():
        notes.append(f"t truncated at {t[keep][-1] if keep.any() else float('nan'):.3g}: "
                     f"fewer than {min_expected:g} expected exceedances beyond")
        for msg in notes:
            warnings.warn(msg, stacklevel=2)
        t = t[keep]
    thr = tail_threshold(n, beta, c, mu, t)
    counts = np.array([np.count_nonzero(dn > x) for x in thr])
    p_hat = counts / max(dn.size, 1)
    ci = np.array([wilson_interval(k, dn.size, level) for k in counts]).reshape(-1, 2)
    bound = np.exp(-2 * t)
    passed = ci[:, 0] <= bound
    return TailReport(n, beta, c, mu, t, thr, p_hat, ci[:, 0], ci[:, 1], bound, passed, dn.size,
                      "cap t <= a beta n not enforced (a unspecified)", notes)


def exact_tail(e, c: float, t_grid, mu: float = 0.0) -> np.ndarray:
    """Exact P(D_n > threshold(t)) at beta = 1 from the radius law."""
    from .determinantal import radius_sf

    thr = tail_threshold(e.n, 1.0, c, mu, t_grid)
    return radius_sf(e, e.radius + thr)


@dataclass(frozen=True)
class ScalingReport:
    n: np.ndarray
    beta: np.ndarray
    median: np.ndarray
    scale: np.ndarray
    ratio: np.ndarray
    c0: float
    a_const: float
    trend: float

    @property
    def below_a(self) -> bool:
        return bool(self.ratio[-1] < self.a_const)

    @property
    def sharp_constant(self) -> float:
        return 0.5 / math.sqrt(self.c0)


def localization_scale(n, beta) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return np.sqrt(np.log(n) / (np.asarray(beta, dtype=float) * n))


def localization_scaling(samples: dict, beta, c0: float, min_samples: int = 1000,
                         a_factor: float = 1.1) -> ScalingReport:
    """Median D_n over an n-grid relative to sqrt(log n / (beta n)).

    ``samples`` maps n to an array of D_n draws; ``beta`` is a scalar or a
    mapping n -> beta. ``trend`` is the slope of ratio against log n.
    """
    ns = np.array(sorted(samples))
    if ns.size < 3:
        raise AnalysisError("need at least three values of n")
    betas = np.array([beta[k] if isinstance(beta, dict) else beta for k in ns], dtype=float)
    med = []
    for k in ns:
        d = np.asarray(samples[k])
        if d.size < min_samples:
            raise AnalysisError(f"n={k}: {d.size} samples < {min_samples}")
        med.append(float(np.median(d)))
    return scaling_from_medians(ns, betas, np.array(med), c0, a_factor)


def scaling_from_medians(ns, betas, medians, c0: float, a_factor: float = 1.1) -> ScalingReport:
    ns = np.asarray(ns)
    betas = np.broadcast_to(np.asarray(betas, dtype=float), ns.shape)
    scale = localization_scale(ns, betas)
    ratio = np.asarray(medians) / scale
    trend = float(np.polyfit(np.log(ns), ratio, 1)[0]) if ns.size > 1 else 0.0
    return ScalingReport(ns, np.array(betas), np.asarray(medians), scale, ratio, c0,
                         a_factor / math.sqrt(c0), trend)


def exact_median_dn(e) -> float:
    from .determinantal import radius_quantile

    return max(float(radius_quantile(e, 0.5)[0]) - e.radius, 0.0)


# ---------------------------------------------------------------- large-r tails


def k_of_r(eq: EquilibriumResult, r: float, samples: int = 2048) -> float:
    """Half the minimum of Q_eff over {delta >= r}.

    Radial droplets: Q_eff on the circle of radius R + r together with the
    outer grid cells. Otherwise grid cells with delta >= r.
    """
    cells = eq.cell_delta >= r
    vals = []
    if cells.any():
        vals.append(float(eq.q_eff[cells].min()))
    if eq.radius is not None:
        t = 2 * np.pi * np.arange(samples) / samples
        vals.append(float(effective_potential(eq, (eq.radius + r) * np.exp(1j * t)).min()))
    if not vals:
        raise AnalysisError(f"no grid cells at distance >= {r}")
    return 0.5 * min(vals)


@dataclass(frozen=True)
class LargeTailReport:
    r: np.ndarray
    k: np.ndarray
    bound: np.ndarray
    count: np.ndarray
    p_hat: np.ndarray
    ci_lo: np.ndarray
    passed: np.ndarray
    r0: float
    samples: int

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passed))


def large_r_tail(dn, eq: EquilibriumResult, r_grid, n: int, beta: float, c: float,
                 level: float = 0.95) -> LargeTailReport:
    """Empirical P(D_n > r) against e^{-k(r) beta n}.

    Only r >= r0 = sqrt(a0 / c) is admissible.
    """
    r = np.asarray(r_grid, dtype=float)
    r0 = math.sqrt(eq.a0 / c)
    if np.any(r < r0):
        raise AnalysisError(f"r below r0 = {r0:.4g}")
    dn = np.asarray(dn, dtype=float)
    k = np.array([k_of_r(eq, x) for x in r])
    bound = np.exp(-k * beta * n)
    count = np.array([np.count_nonzero(dn > x) for x in r])
    p_hat = count / max(dn.size, 1)
    lo = np.array([wilson_interval(cnt, dn.size, level)[0] for cnt in count])
    return LargeTailReport(r, k, bound, count, p_hat, lo, lo <= bound, r0, dn.size)


# ---------------------------------------------------------- one-point function


@dataclass(frozen=True)
class RadialProfile:
    edges: np.ndarray
    intensity: np.ndarray
    stderr: np.ndarray
    samples: int
    n: int
    bin_width_ok: bool

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def total(self) -> float:
        return float(np.sum(self.intensity * np.diff(self.edges ** 2)))


def one_point_histogram(configs, edges) -> RadialProfile:
    """Radial intensity per dA: counts / (samples * annulus dA-area)."""
    configs = np.atleast_2d(np.asarray(configs))
    if configs.size == 0:
        raise AnalysisError("empty batch")
    m, n = configs.shape
    edges = np.asarray(edges, dtype=float)
    area = np.diff(edges ** 2)
    per = np.stack([np.histogram(np.abs(c), edges)[0] for c in configs]).astype(float)
    intensity = per.mean(axis=0) / area
    se = np.array([blocked_standard_error(per[:, i]) for i in range(per.shape[1])]) / area
    ok = bool(np.min(np.diff(edges)) >= 2 / math.sqrt(n))
    return RadialProfile(edges, intensity, se, m, n, ok)


def one_point_histogram_2d(configs, grid) -> np.ndarray:
    """Intensity on the cells of a :class:`GridDomain`, per dA."""
    z = np.asarray(configs).ravel()
    m = np.atleast_2d(configs).shape[0]
    x0, x1, y0, y1 = grid.box
    hist, _, _ = np.histogram2d(z.real, z.imag, bins=grid.resolution, range=[[x0, x1], [y0, y1]])
    return hist / (m * grid.cell_area)


def exact_annulus_intensity(e, edges) -> np.ndarray:
    """Exact R_n averaged over annuli (dA-weighted)."""
    from .determinantal import one_point_exact

    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        v, _ = integrate.quad(lambda r: 2 * r * float(one_point_exact(e, np.array([r]))[0]),
                              a, b, epsabs=0.0, epsrel=1e-10)
        out.append(v / (b * b - a * a))
    return np.array(out)


# -------------------------------------------------------------------- decay fit


@dataclass(frozen=True)
class DecayFit:
    window: tuple
    delta: np.ndarray
    neg_log: np.ndarray
    slope: float
    intercept: float
    c_hat: float
    residual: float
    beta: float
    n: int
    c0: Optional[float]

    @property
    def verdict(self) -> Optional[bool]:
        if self.c0 is None:
            return None
        return bool(self.c_hat >= 0.9 * 2 * self.c0)


def decay_fit(delta, values, n: int, beta: float = 1.0, window=(0.02, 0.08),
              c0: Optional[float] = None) -> DecayFit:
    """Least-squares slope of -log R against delta^2 on the window."""
    delta = np.asarray(delta, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (delta >= window[0]) & (delta <= window[1])
    if sel.sum() < 2:
        raise AnalysisError("fewer than two points in the decay window")
    if np.any(values[sel] <= 0):
        raise AnalysisError("non-positive values in the decay window")
    x = delta[sel] ** 2
    y = -np.log(values[sel])
    slope, intercept = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DecayFit(tuple(window), delta[sel], y, float(slope), float(intercept),
                    float(slope / (beta * n)), res, beta, n, c0)


def exact_decay_fit(e, window=(0.02, 0.08), points: int = 61, direction: complex = 1.0) -> DecayFit:
    """Decay fit of the exact beta = 1 one-point function along a ray."""
    from .determinantal import one_point_exact

    d = np.linspace(window[0], window[1], points)
    vals = one_point_exact(e, (e.radius + d) * direction)
    return decay_fit(d, vals, e.n, 1.0, window, e.c0)


# ---------------------------------------------------------- empirical measures


def _clip_box(z, half):
    return np.clip(z.real, -half, half) + 1j * np.clip(z.imag, -half, half)


def builtin_test_functions(clip: float = 2.0) -> dict:
    """Bounded continuous test functions (clipped at the box |x|, |y| <= clip)."""
    return {
        "one": lambda z: np.ones(np.shape(z)),
        "abs2_clipped": lambda z: np.abs(_clip_box(z, clip)) ** 2,
        "re_clipped": lambda z: _clip_box(z, clip).real,
        "im_clipped": lambda z: _clip_box(z, clip).imag,
        "bump_center": lambda z: np.exp(-np.abs(z) ** 2 / (2 * 0.3 ** 2)),
        "bump_offset": lambda z: np.exp(-np.abs(z - 0.5) ** 2 / (2 * 0.25 ** 2)),
        "bump_edge": lambda z: np.exp(-np.abs(z - 0.9j) ** 2 / (2 * 0.2 ** 2)),
    }


def sigma_expectation(eq: EquilibriumResult, f: Callable, nodes: int = 96) -> float:
    """sigma(f): polar Gauss-Legendre on radial droplets, cell sum otherwise."""
    p = base_of(eq.potential)
    if eq.radius is None:
        return eq.sigma_integral(f)
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * eq.radius * (x + 1)
    wr = 0.5 * eq.radius * w
    t = 2 * np.pi * np.arange(2 * nodes) / (2 * nodes)
    z = r[:, None] * np.exp(1j * t)[None, :]
    dens = p.laplacian(z)
    # dA = r dr dtheta / pi
    return float(np.sum(wr[:, None] * r[:, None] * dens * f(z)) * (2 * np.pi / (2 * nodes)) / np.pi)


@dataclass(frozen=True)
class ConvergenceReport:
    names: list
    sample_mean: np.ndarray
    sigma_value: np.ndarray
    stderr: np.ndarray
    passed: np.ndarray
    tol: float

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passed))

    def rows(self):
        for i, name in enumerate(self.names):
            yield (name, self.sample_mean[i], self.sigma_value[i],
                   abs(self.sample_mean[i] - self.sigma_value[i]), self.stderr[i], bool(self.passed[i]))


def empirical_measure_test(configs, eq: EquilibriumResult, funcs: Optional[dict] = None,
                           tol: float = 0.05, n_blocks: int = 50) -> ConvergenceReport:
    """Compare the sample mean of mu_n(f) with sigma(f) for each test function."""
    configs = np.atleast_2d(np.asarray(configs))
    funcs = funcs or builtin_test_functions()
    names, means, sig, ses = [], [], [], []
    for name, f in funcs.items():
        per = np.mean(f(configs), axis=1)
        names.append(name)
        means.append(float(per.mean()))
        ses.append(blocked_standard_error(per, n_blocks))
        sig.append(sigma_expectation(eq, f))
    means, sig, ses = np.array(means), np.array(sig), np.array(ses)
    allowed = np.maximum(tol, 3 * np.nan_to_num(ses))
    return ConvergenceReport(names, means, sig, ses, np.abs(means - sig) <= allowed, tol)


# --------------------------------------------------------------------- energies


def log_kernel(z, w, p: Potential) -> np.ndarray:
    """L_Q(z, w) = log 1/|z - w| + (Q(z) + Q(w)) / 2."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    with np.errstate(divide="ignore"):
        return -np.log(np.abs(z - w)) + 0.5 * (p.evaluate(z) + p.evaluate(w))


def energy_discrete(z, p: Potential) -> float:
    """Discrete energy (1/(n(n-1))) sum_{j != k} log 1/|z_j - z_k| + mean Q(z_j)."""
    z = np.asarray(z, dtype=complex).ravel()
    n = z.size
    if n < 2:
        raise AnalysisError("need at least two points")
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, 1.0)
    if np.any(d == 0):
        return math.inf
    return float(-np.log(d).sum() / (n * (n - 1)) + p.evaluate(z).mean())


def energy_continuous(eq: EquilibriumResult, workers: int = 1) -> float:
    """I_Q[sigma] for the grid weights, with the same cell self-energy as the solver."""
    from .equilibrium import LogKernel

    w = eq.sigma_weights
    kern = LogKernel(eq.grid.resolution, eq.grid.h, workers)
    q = base_of(eq.potential).evaluate(eq.grid.centers)
    return float(np.sum(w * kern(w)) + np.sum(w * q))


def sigma_moments(eq: EquilibriumResult):
    """(int Q dsigma, int log(Delta Q) dsigma) for the entropy bound."""
    p = base_of(eq.potential)
    if eq.radius is not None and p.radial_profile is not None:
        lap = lambda r: float(p.laplacian(np.array([complex(r)]))[0])
        q_int, _ = integrate.quad(lambda r: float(p.radial_profile(np.array(r))) * lap(r) * 2 * r,
                                  0, eq.radius, epsabs=1e-14, epsrel=1e-12, limit=200)
        ent, _ = integrate.quad(lambda r: lap(r) * math.log(lap(r)) * 2 * r if lap(r) > 0 else 0.0,
                                0, eq.radius, epsabs=1e-14, epsrel=1e-12, limit=200)
        return q_int, ent
    w = eq.sigma_weights
    z = eq.grid.centers
    lap = p.laplacian(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        logl = np.where((w > 0) & (lap > 0), np.log(lap), 0.0)
    return float(np.sum(w * p.evaluate(z))), float(np.sum(w * logl))


def entropy_rhs(eq: EquilibriumResult, n: int, beta: float) -> float:
    """-beta (1 - 1/n) gamma(Q) - (beta/n) int Q dsigma - (1/n) int log(Delta Q) dsigma."""
    q_int, ent = sigma_moments(eq)
    return -beta * (1 - 1 / n) * eq.robin_const - beta / n * q_int - ent / n


@dataclass(frozen=True)
class PartitionResult:
    n: int
    beta: float
    log_z: float
    rel_change: float
    nodes: tuple
    rhs: Optional[float] = None

    @property
    def scaled(self) -> float:
        return self.log_z / self.n ** 2

    @property
    def bound_ok(self) -> Optional[bool]:
        if self.rhs is None:
            return None
        return bool(self.scaled >= self.rhs)


def _radial_cutoff(p: Potential, n: int, beta: float, depth: float = 60.0) -> float:
    # beyond r_max the Boltzmann weight of any particle is below e^{-depth}
    def excess(r):
        z = r * np.exp(2j * np.pi * np.arange(64) / 64)
        q = float(np.min(p.evaluate(z)))
        return beta * n * q - 2 * beta * (n - 1) * math.log(2 * r + 1) - depth

    hi = 1.0
    while excess(hi) < 0:
        hi *= 1.5
        if hi > 1e6:
            raise AnalysisError("cannot bound the partition integrand")
    return hi


def partition_bruteforce(p: Potential, beta: float, n: int, radial_nodes: Optional[int] = None,
                         angular_nodes: Optional[int] = None, rtol: float = 1e-7,
                         budget: int = 60_000_000, max_levels: int = 4,
                         eq: Optional[EquilibriumResult] = None) -> PartitionResult:
    """log Z_n = log int e^{-beta H_n} dA^n by tensor quadrature, n <= 3.

    Each particle uses polar coordinates (Gauss-Legendre panels in r,
    trapezoid in angle); for radial Q the first angle is integrated out.
    Node counts start at (24, 32) for n <= 2 and (8, 12) for n = 3 and grow
    by 1.5x until log Z changes by less than ``rtol`` (relative to
    max(1, |log Z|)); exceeding ``budget`` evaluations raises.
    """
    if n not in (1, 2, 3):
        raise AnalysisError("brute-force partition function only for n <= 3")
    from .sampler import hamiltonian

    r_max = _radial_cutoff(p, n, beta)
    radial = base_of(p).is_radial and not hasattr(p, "u")
    prev = None
    mr = radial_nodes or (24 if n < 3 else 8)
    ma = angular_nodes or (32 if n < 3 else 12)
    for level in range(max_levels):
        val = _log_z_tensor(p, beta, n, r_max, mr, ma, radial, budget)
        if prev is not None:
            change = abs(val - prev) / max(1.0, abs(val))
            if change <= rtol:
                rhs = entropy_rhs(eq, n, beta) if eq is not None else None
                return PartitionResult(n, beta, val, change, (mr, ma), rhs)
        prev = val
        mr = int(math.ceil(1.5 * mr))
        ma = int(math.ceil(1.5 * ma))
    raise AnalysisError(f"partition quadrature not converged (last change {change:.3g})")


def _log_z_tensor(p, beta, n, r_max, mr, ma, radial, budget) -> float:
    panels = 4
    x, w = np.polynomial.legendre.leggauss(mr)
    edges = np.linspace(0.0, r_max, panels + 1)
    r = np.concatenate([0.5 * (b - a) * (x + 1) + a for a, b in zip(edges[:-1], edges[1:])])
    wr = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    th = 2 * np.pi * np.arange(ma) / ma
    wt = np.full(ma, 2 * np.pi / ma)
    # one particle: points and dA weights (r dr dtheta / pi)
    z1 = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    w1 = (wr[:, None] * r[:, None] * wt[None, :]).ravel() / np.pi
    if radial:
        first = r.astype(complex)
        wf = 2 * wr * r          # angle integrated: 2 pi / pi
    else:
        first, wf = z1, w1
    total_pts = first.size * z1.size ** (n - 1)
    if total_pts > budget:
        raise AnalysisError(f"quadrature budget exceeded ({total_pts:.3g} > {budget:.3g} points)")
    logw_f = np.log(np.where(wf > 0, wf, np.finfo(float).tiny))
    logw1 = np.log(np.where(w1 > 0, w1, np.finfo(float).tiny))
    q1 = p.evaluate(z1)
    qf = p.evaluate(first)
    if n == 1:
        return float(special.logsumexp(logw_f - beta * qf))
    if n == 2:
        with np.errstate(divide="ignore"):
            pair = 2 * np.log(np.abs(first[:, None] - z1[None, :]))
        e = -beta * (-pair + 2 * (qf[:, None] + q1[None, :]))
        return float(special.logsumexp(e + logw_f[:, None] + logw1[None, :]))
    # n == 3: loop over the first particle, vectorize the other two
    with np.errstate(divide="ignore"):
        l23 = np.log(np.abs(z1[:, None] - z1[None, :]))
    base23 = 2 * l23 - 3 * (q1[:, None] + q1[None, :])
    acc = []
    for i in range(first.size):
        with np.errstate(divide="ignore"):
            l1 = np.log(np.abs(first[i] - z1))
        e = beta * (base23 + 2 * (l1[:, None] + l1[None, :]) - 3 * qf[i])
        acc.append(logw_f[i] + special.logsumexp(e + logw1[:, None] + logw1[None, :]))
    return float(special.logsumexp(acc))


# --------------------------------------------------------- Lagrange identities


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    samples: int

    @property
    def z_score(self) -> float:
        se = math.hypot(self.lhs_se, self.rhs_se)
        return abs(self.lhs - self.rhs) / se if se > 0 else (0.0 if self.lhs == self.rhs else math.inf)

    def ok(self, k: float = 3.0) -> bool:
        return self.z_score <= k


def one_index_identity(configs, j, u_region, w_region, p: Potential, beta: float,
                       nodes: int = 16, n_blocks: int = 50) -> IdentityCheck:
    """E[1_U(z_j) Y_{j,W}] against |U| P(z_1 in W).

    ``j=None`` averages the left side over all particle indices, which is
    legitimate by exchangeability and reduces variance. The right side
    always uses all particles.
    """
    from .sampler import lagrange_functional_batch

    configs = np.atleast_2d(np.asarray(configs))
    m = configs.shape[1]
    indices = range(m) if j is None else [j]
    vals = np.zeros(configs.shape[0])
    for jj in indices:
        ind = u_region.contains(configs[:, jj])
        if ind.any():
            vals[ind] += lagrange_functional_batch(configs[ind], jj, w_region, p, beta, nodes)
    vals /= len(indices)
    rhs_per = u_region.area * w_region.contains(configs).mean(axis=1)
    return IdentityCheck(float(vals.mean()), blocked_standard_error(vals, n_blocks),
                         float(rhs_per.mean()), blocked_standard_error(rhs_per, n_blocks),
                         configs.shape[0])


def two_index_identity(configs, j, k, u1, u2, w1, w2, p: Potential, beta: float,
                       nodes: int = 8, sequential: bool = True, n_blocks: int = 50) -> IdentityCheck:
    """E[1_{U1}(z_j) 1_{U2}(z_k) Y] against |U1||U2| P(z_1 in W1, z_2 in W2).

    ``sequential`` selects the two-variable functional built with z_j moved
    to the first integration variable (see
    :func:`coulombgas.sampler.lagrange_pair_functional_batch`).
    ``j=k=None`` averages over all ordered pairs of distinct indices.
    """
    from .sampler import lagrange_pair_functional_batch

    configs = np.atleast_2d(np.asarray(configs))
    m = configs.shape[1]
    if j is None or k is None:
        pairs = [(a, b) for a in range(m) for b in range(m) if a != b]
    else:
        pairs = [(j, k)]
    vals = np.zeros(configs.shape[0])
    for a, b in pairs:
        ind = u1.contains(configs[:, a]) & u2.contains(configs[:, b])
        if ind.any():
            vals[ind] += lagrange_pair_functional_batch(configs[ind], a, b, w1, w2, p, beta,
                                                        nodes, sequential)
    vals /= len(pairs)
    in1 = w1.contains(configs)
    in2 = w2.contains(configs)
    # ordered pairs of distinct particles
    pair = (in1.sum(1) * in2.sum(1) - (in1 & in2).sum(1)) / (m * (m - 1))
    rhs_per = u1.area * u2.area * pair
    return IdentityCheck(float(vals.mean()), blocked_standard_error(vals, n_blocks),
                         float(rhs_per.mean()), blocked_standard_error(rhs_per, n_blocks),
                         configs.shape[0])
