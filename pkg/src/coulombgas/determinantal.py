"""Exact computations for the beta = 1 gas with a radial potential.

For radial Q the monomials are orthogonal in L^2(e^{-nQ} dA), with norms

    h_k = int 2 r^(2k+1) e^{-n Q(r)} dr,

and the moduli of the n particles are distributed as independent radii with
densities 2 r^(2k+1) e^{-nQ(r)} / h_k, k = 0..n-1. Everything here works with
the substitution r = e^s, in which each radial factor is log-concave.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import integrate, optimize, special, stats

from .potential import Potential

TAIL_CUT = 40.0       # integrands below exp(-TAIL_CUT) * peak are dropped
PANELS = 32
NODES = 16
EULER_GAMMA = float(np.euler_gamma)


class DeterminantalError(RuntimeError):
    pass


def _require_radial(p: Potential):
    if p.radial_profile is None or p.radial_derivative is None:
        raise DeterminantalError(f"{p.name} has no radial profile")


@dataclass(frozen=True, eq=False)
class RadialEnsemble:
    """Norms and per-index radial tables for the beta = 1 gas with n particles."""

    n: int
    potential: Potential
    log_norms: np.ndarray
    radius: float
    c0: float
    s_lo: np.ndarray = field(repr=False)
    s_hi: np.ndarray = field(repr=False)
    panel_mass: np.ndarray = field(repr=False)     # (n, PANELS), normalized
    s_mode: np.ndarray = field(repr=False)
    quad_error: float = 0.0

    # ----------------------------------------------------------- log densities

    def log_density(self, k, s):
        """log of the normalized density of log-radius for index k at s."""
        k = np.asarray(k)
        s = np.asarray(s, dtype=float)
        q = self.potential.radial_profile(np.exp(s))
        return math.log(2.0) + (2 * k + 2) * s - self.n * q - self.log_norms[k]

    # --------------------------------------------------------- factor CDFs

    def _partial(self, k, s):
        """Lower and upper masses of factor k at log-radius s (arrays, same shape)."""
        k = np.asarray(k)
        s = np.asarray(s, dtype=float)
        k, s = np.broadcast_arrays(k, s)
        lo, hi = self.s_lo[k], self.s_hi[k]
        width = (hi - lo) / PANELS
        below = s <= lo
        above = s >= hi
        sc = np.clip(s, lo, hi)
        idx = np.minimum(((sc - lo) / width).astype(int), PANELS - 1)
        a = lo + idx * width
        x, w = _gauss_legendre()
        half = 0.5 * (sc - a)
        nodes = a[..., None] + half[..., None] * (x + 1)
        part = half * np.sum(w * np.exp(self.log_density(k[..., None], nodes)), axis=-1)
        mass = self.panel_mass[k]
        cum_lo = np.take_along_axis(self._cum_left[k], idx[..., None], axis=-1)[..., 0]
        cum_hi = np.take_along_axis(self._cum_right[k], idx[..., None], axis=-1)[..., 0]
        pm = np.take_along_axis(mass, idx[..., None], axis=-1)[..., 0]
        lower = cum_lo + part
        upper = cum_hi + np.maximum(pm - part, 0.0)
        lower = np.where(below, 0.0, np.where(above, 1.0, lower))
        upper = np.where(below, 1.0, np.where(above, 0.0, upper))
        return lower, upper

    @cached_property
    def _cum_left(self):
        # mass strictly before each panel
        c = np.cumsum(self.panel_mass, axis=1)
        return np.concatenate([np.zeros((self.n, 1)), c[:, :-1]], axis=1)

    @cached_property
    def _cum_right(self):
        # mass strictly after each panel
        c = np.cumsum(self.panel_mass[:, ::-1], axis=1)[:, ::-1]
        return np.concatenate([c[:, 1:], np.zeros((self.n, 1))], axis=1)

    def factor_cdf(self, k, r) -> np.ndarray:
        """F_k(r) = P(|z| <= r) for the k-th independent modulus."""
        with np.errstate(divide="ignore"):
            s = np.log(np.asarray(r, dtype=float))
        lower, upper = self._partial(k, s)
        return np.where(lower < 0.5, lower, 1.0 - upper)

    def factor_sf(self, k, r) -> np.ndarray:
        with np.errstate(divide="ignore"):
            s = np.log(np.asarray(r, dtype=float))
        lower, upper = self._partial(k, s)
        return np.where(upper < 0.5, upper, 1.0 - lower)


_GL_CACHE: dict = {}


def _gauss_legendre(m: int = NODES):
    if m not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(m)
        _GL_CACHE[m] = (x, w)
    return _GL_CACHE[m]


def _log_integrand(p: Potential, n: int, k: int):
    def g(s):
        return math.log(2.0) + (2 * k + 2) * s - n * float(p.radial_profile(np.array(math.exp(s))))
    return g


def _peak(p: Potential, n: int, k: int) -> float:
    """Maximizer in s of the log-radius integrand: r Q'(r) = (2k+2)/n."""
    target = (2 * k + 2) / n

    def f(s):
        r = math.exp(s)
        return r * float(p.radial_derivative(np.array(r))) - target

    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2
        if lo < -700:
            raise DeterminantalError("no peak of the radial integrand found")
    while f(hi) < 0:
        hi *= 2
        if hi > 700:
            raise DeterminantalError("potential grows too slowly for finite norms")
    return optimize.brentq(f, lo, hi, xtol=1e-14)


def _cut(g, s0: float, g0: float, direction: int) -> float:
    step = 0.5
    s = s0
    while g(s + direction * step) > g0 - TAIL_CUT:
        step *= 2
        if step > 1e3:
            raise DeterminantalError("integrand tail does not decay")
    return optimize.brentq(lambda t: g(t) - (g0 - TAIL_CUT), s0, s0 + direction * step, xtol=1e-12)


def build_ensemble(p: Potential, n: int, radius: Optional[float] = None) -> RadialEnsemble:
    """Norms h_k and factor tables for the n-particle beta = 1 ensemble."""
    _require_radial(p)
    if n < 1:
        raise DeterminantalError("n must be >= 1")
    if radius is None:
        from .equilibrium import radial_radius
        radius = radial_radius(p)
    c0 = float(p.laplacian(np.array([complex(radius)]))[0])

    log_norms = np.empty(n)
    s_lo = np.empty(n)
    s_hi = np.empty(n)
    s_mode = np.empty(n)
    panel_mass = np.empty((n, PANELS))
    x, w = _gauss_legendre()
    worst = 0.0
    for k in range(n):
        g = _log_integrand(p, n, k)
        s0 = _peak(p, n, k)
        g0 = g(s0)
        a = _cut(g, s0, g0, -1)
        b = _cut(g, s0, g0, +1)
        val, err = integrate.quad(lambda s: math.exp(g(s) - g0), a, b, points=[s0],
                                  epsabs=0.0, epsrel=1e-13, limit=400)
        if not val > 0:
            raise DeterminantalError(f"norm quadrature failed at k={k}")
        edges = np.linspace(a, b, PANELS + 1)
        half = 0.5 * np.diff(edges)
        nodes = edges[:-1, None] + half[:, None] * (x + 1)
        q = p.radial_profile(np.exp(nodes))
        dens = np.exp(math.log(2.0) + (2 * k + 2) * nodes - n * q - g0)
        masses = half * (dens @ w)
        total = masses.sum()
        worst = max(worst, abs(total - val) / val, err / val)
        log_norms[k] = g0 + math.log(val)
        s_lo[k], s_hi[k], s_mode[k] = a, b, s0
        panel_mass[k] = masses / val
    if worst > 1e-8:
        raise DeterminantalError(f"norm quadrature error {worst:.3g} exceeds 1e-8")
    return RadialEnsemble(n, p, log_norms, float(radius), c0, s_lo, s_hi, panel_mass, s_mode, worst)


# ------------------------------------------------------------ one-point function


def log_one_point(e: RadialEnsemble, z) -> np.ndarray:
    """log R_n(z) with R_n(z) = e^{-nQ(z)} sum_k |z|^(2k) / h_k."""
    z = np.asarray(z)
    r = np.abs(z).ravel().astype(float)
    k = np.arange(e.n)
    out = np.empty(r.size)
    for start in range(0, r.size, 2048):
        rr = r[start:start + 2048]
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(rr)
            terms = 2 * k[None, :] * lr[:, None] - e.log_norms[None, :]
        terms[:, 0] = -e.log_norms[0]
        terms = np.where(np.isnan(terms), -np.inf, terms)
        out[start:start + 2048] = special.logsumexp(terms, axis=1) - e.n * e.potential.radial_profile(rr)
    return out.reshape(np.shape(z))


def one_point_exact(e: RadialEnsemble, z) -> np.ndarray:
    """Exact one-point function (intensity with respect to dA)."""
    return np.exp(log_one_point(e, z))


def one_point_mass(e: RadialEnsemble) -> float:
    """int R_n dA, which must equal n."""
    f = lambda r: 2 * r * float(np.exp(log_one_point(e, np.array([r]))[0]))
    r_max = float(np.exp(e.s_hi.max()))
    total = 0.0
    edges = np.unique(np.r_[0.0, np.linspace(0, e.radius, 9)[1:], e.radius * 1.25, r_max])
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    return total


def kernel_profile(e: RadialEnsemble, radii) -> np.ndarray:
    """Radial profile of R_n on the given radii."""
    return one_point_exact(e, np.asarray(radii, dtype=float))


# ------------------------------------------------------------------ radius law


def _log_cdf_and_slope(e: RadialEnsemble, s):
    """sum_k log F_k at log-radii ``s`` and its derivative in s."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    val = np.zeros(s.size)
    slope = np.zeros(s.size)
    finite = np.isfinite(s)
    val[~finite & (s < 0)] = -np.inf
    idx = np.nonzero(finite)[0]
    if idx.size == 0:
        return val, slope
    active = np.nonzero(e.s_hi > s[idx].min())[0]
    if active.size == 0:
        return val, slope
    chunk = max(1, 2_000_000 // (active.size * NODES))
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        ss = np.broadcast_to(s[sel, None], (sel.size, active.size))
        kk = np.broadcast_to(active[None, :], ss.shape)
        lower, upper = e._partial(kk, ss)
        lower = np.clip(lower, 0.0, 1.0)
        upper = np.clip(upper, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(upper < 0.5, np.log1p(-upper), np.log(lower))
            dens = np.exp(e.log_density(kk, ss) - logs)
        val[sel] = logs.sum(axis=1)
        slope[sel] = np.where(np.isfinite(dens), dens, 0.0).sum(axis=1)
    return val, slope


def log_radius_cdf(e: RadialEnsemble, r) -> np.ndarray:
    """log P(max_j |z_j| <= r) = sum_k log F_k(r)."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        s = np.log(r)
    return _log_cdf_and_slope(e, s.ravel())[0].reshape(r.shape)


def radius_cdf(e: RadialEnsemble, r) -> np.ndarray:
    """P(max_j |z_j| <= r)."""
    return np.exp(log_radius_cdf(e, r))


def radius_sf(e: RadialEnsemble, r) -> np.ndarray:
    """P(max_j |z_j| > r), accurate in the far tail."""
    return -np.expm1(log_radius_cdf(e, r))


def _newton(fun, target, lo, hi, s, tol, increasing=True):
    """Vectorized safeguarded Newton for fun(s) = target on brackets [lo, hi].

    ``fun(s, mask)`` returns values and slopes on the entries selected by mask.
    Iterates only on unconverged entries; tolerance is absolute in r = e^s.
    """
    todo = np.ones(s.size, dtype=bool)
    for _ in range(200):
        i = np.nonzero(todo)[0]
        if i.size == 0:
            return s
        val, slope = fun(s[i], i)
        f = val - target[i]
        right = f < 0 if increasing else f > 0
        lo[i] = np.where(right, s[i], lo[i])
        hi[i] = np.where(right, hi[i], s[i])
        with np.errstate(divide="ignore", invalid="ignore"):
            s_new = s[i] - f / slope
        bad = ~np.isfinite(s_new) | (s_new <= lo[i]) | (s_new >= hi[i])
        s_new = np.where(bad, 0.5 * (lo[i] + hi[i]), s_new)
        s_new = np.where(f == 0, s[i], s_new)  # exact root: keep it
        step = np.abs(np.exp(s_new) - np.exp(s[i]))
        s[i] = s_new
        todo[i] = ~((step <= tol) | (np.exp(hi[i]) - np.exp(lo[i]) <= tol) | (f == 0))
    raise DeterminantalError("inverse CDF iteration did not converge")


def radius_quantile(e: RadialEnsemble, u, tol: float = 1e-10, table: int = 400) -> np.ndarray:
    """Inverse of :func:`radius_cdf` by safeguarded Newton in log-radius.

    Starting points come from interpolation in a tabulated log-CDF.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any((u <= 0) | (u >= 1)):
        raise DeterminantalError("quantile levels must lie in (0, 1)")
    target = np.log(u)
    lo_all, hi_all = float(e.s_lo.max()), float(e.s_hi.max())
    grid = np.linspace(lo_all, hi_all, table)
    tab = _log_cdf_and_slope(e, grid)[0]
    keep = np.isfinite(tab)
    s0 = np.interp(target, tab[keep], grid[keep])
    return np.exp(_newton(lambda s, i: _log_cdf_and_slope(e, s), target,
                          np.full(u.size, lo_all), np.full(u.size, hi_all), s0, tol))


def sample_max_radius(e: RadialEnsemble, rng: np.random.Generator, size: int) -> np.ndarray:
    """Exact draws of max_j |z_j| by inversion of the product law."""
    u = rng.random(size)
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return radius_quantile(e, u)


def sample_radii(e: RadialEnsemble, rng: np.random.Generator, size: Optional[int] = None,
                 tol: float = 1e-10) -> np.ndarray:
    """Independent moduli, one per index k (shape (n,) or (size, n)).

    Each factor is inverted by safeguarded Newton iteration in log-radius on
    the bracket of its tabulated support, to absolute tolerance ``tol``.
    """
    shape = (e.n,) if size is None else (size, e.n)
    u = rng.random(shape)
    k = np.broadcast_to(np.arange(e.n), shape)
    out = np.empty(shape)
    flat_u, flat_k, flat_out = u.ravel(), k.ravel(), out.reshape(-1)
    for start in range(0, flat_u.size, 65536):
        sl = slice(start, start + 65536)
        flat_out[sl] = _invert_factors(e, flat_k[sl], flat_u[sl], tol)
    return out


def _invert_factors(e: RadialEnsemble, k: np.ndarray, u: np.ndarray, tol: float) -> np.ndarray:
    # solve log F_k = log u for u <= 1/2, log(1 - F_k) = log(1 - u) otherwise
    use_upper = u > 0.5
    with np.errstate(divide="ignore"):
        target = np.where(use_upper, np.log1p(-u), np.log(u))

    def fun(s, i):
        kk, up = k[i], use_upper[i]
        lower, upper = e._partial(kk, s)
        lower = np.clip(lower, 0.0, 1.0)
        upper = np.clip(upper, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            dens = np.exp(e.log_density(kk, s))
            val = np.where(up, np.log(upper), np.log(lower))
            slope = np.where(up, -dens / upper, dens / lower)
        # decreasing branch: flip sign so the bracket logic sees an increasing map
        return np.where(up, -val, val), np.where(up, -slope, slope)

    flipped = np.where(use_upper, -target, target)
    s0 = e.s_mode[k].copy()
    return np.exp(_newton(fun, flipped, e.s_lo[k].copy(), e.s_hi[k].copy(), s0, tol))


def dn_from_radii(radii: np.ndarray, radius: float, signed: bool = False) -> np.ndarray:
    """D_n = max(0, max_j |z_j| - R) over the last axis of per-particle moduli.

    ``signed`` keeps negative values.
    """
    return dn_from_max(np.max(np.asarray(radii, dtype=float), axis=-1), radius, signed)


def dn_from_max(max_radius, radius: float, signed: bool = False) -> np.ndarray:
    """D_n from draws of the maximal modulus."""
    d = np.asarray(max_radius, dtype=float) - radius
    return d if signed else np.maximum(d, 0.0)


# --------------------------------------------------------------------- Gumbel


@dataclass(frozen=True)
class GumbelConstants:
    """Centering and scale for the rescaled maximal modulus.

    gamma_n = log(n / 2 pi) - loglog_coeff * log log n + log(R^2 c0).
    """

    n: int
    c0: float
    radius: float
    loglog_coeff: float = 1.0

    @property
    def gamma_n(self) -> float:
        n = self.n
        g = (math.log(n / (2 * math.pi)) - self.loglog_coeff * math.log(math.log(n))
             + math.log(self.radius ** 2 * self.c0))
        if not g > 0:
            raise DeterminantalError(f"gamma_n = {g:.4g} <= 0; n too small")
        return g

    @property
    def shift(self) -> float:
        return math.sqrt(self.gamma_n / (4 * self.n * self.c0))

    @property
    def scale(self) -> float:
        return math.sqrt(4 * self.n * self.gamma_n * self.c0)

    @property
    def predicted_mean_max(self) -> float:
        return self.radius + self.shift + EULER_GAMMA / self.scale

    def shift_ratio(self) -> float:
        """shift / ((1 / (2 sqrt c0)) sqrt(log n / n)); tends to 1."""
        lead = math.sqrt(math.log(self.n) / self.n) / (2 * math.sqrt(self.c0))
        return self.shift / lead


def gumbel_constants(e: RadialEnsemble, loglog_coeff: float = 1.0) -> GumbelConstants:
    """Rescaling constants; warns when the potential is not a built-in radial one."""
    if not re.fullmatch(r"ginibre|power\([^)]*\)", e.potential.name):
        warnings.warn(f"Gumbel limit unverified for potential {e.potential.name!r}", stacklevel=2)
    return GumbelConstants(e.n, e.c0, e.radius, loglog_coeff)


def gumbel_transform(dn, gc: GumbelConstants) -> np.ndarray:
    """omega_n = sqrt(4 n gamma_n c0) (D_n - sqrt(gamma_n / (4 n c0)))."""
    return gc.scale * (np.asarray(dn, dtype=float) - gc.shift)


def gumbel_ks(omega) -> float:
    """Kolmogorov-Smirnov distance to the standard Gumbel law exp(-exp(-t))."""
    return float(stats.kstest(np.asarray(omega), stats.gumbel_r.cdf).statistic)


# ---------------------------------------------------------- weighted polynomials


def log_abs_poly(coeffs, z) -> np.ndarray:
    """log|q(z)| for q with ascending coefficients, stable for large |z|."""
    coeffs = np.asarray(coeffs, dtype=complex)
    z = np.asarray(z, dtype=complex)
    d = coeffs.size - 1
    out = np.empty(z.shape)
    small = np.abs(z) <= 1
    with np.errstate(divide="ignore"):
        out[small] = np.log(np.abs(np.polynomial.polynomial.polyval(z[small], coeffs)))
        zb = z[~small]
        out[~small] = d * np.log(np.abs(zb)) + np.log(np.abs(
            np.polynomial.polynomial.polyval(1 / zb, coeffs[::-1])))
    return out


def weighted_poly_log(coeffs, p: Potential, n: int, z) -> np.ndarray:
    """log|f(z)| for f = q e^{-nQ/2}."""
    if len(coeffs) > n:
        raise DeterminantalError("polynomial degree must be at most n - 1")
    z = np.asarray(z, dtype=complex)
    return log_abs_poly(coeffs, z) - 0.5 * n * p.evaluate(z)


def weighted_poly_eval(coeffs, p: Potential, n: int, z) -> np.ndarray:
    return np.exp(weighted_poly_log(coeffs, p, n, z))


def random_coefficients(e: RadialEnsemble, rng: np.random.Generator, degree: Optional[int] = None) -> np.ndarray:
    """Complex Gaussian coefficients in the orthonormal monomial basis."""
    d = e.n - 1 if degree is None else degree
    a = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
    return a * np.exp(-0.5 * e.log_norms[:d + 1])


@dataclass(frozen=True)
class PropertyReport:
    trials: int
    violations: int
    worst_ratio: float
    details: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def maximum_principle_check(eq, n: int, rng: np.random.Generator, trials: int = 100,
                            ring=(0.02, 0.5), n_angles: Optional[int] = None, n_ring: int = 24,
                            rtol: float = 1e-6) -> PropertyReport:
    """Compare max over an exterior ring of |f| e^{n Q_eff / 2} with max_S |f|.

    ``eq`` supplies the droplet and Q_eff. Polynomials have degree n - 1 and
    random coefficients in the orthonormal basis of the radial weight when
    available (plain Gaussian coefficients otherwise).
    """
    from .equilibrium import effective_potential

    p = eq.potential
    m = n_angles or max(512, 64 * n)
    geo = eq.geometry
    if geo.disc_radius is not None:
        boundary = geo.disc_radius * np.exp(2j * np.pi * np.arange(m) / m)
    else:
        boundary = geo.boundary_points()
    s_points = np.concatenate([boundary, eq.grid.centers[eq.droplet_mask]])
    # exterior ring: offsets along outward normals of the boundary samples
    offs = np.linspace(ring[0], ring[1], n_ring)
    outward = _outward_points(eq, boundary, offs)
    q_eff = effective_potential(eq, outward)
    ens = build_ensemble(p, n) if p.is_radial else None
    viol = 0
    worst = 0.0
    for _ in range(trials):
        if ens is not None:
            c = random_coefficients(ens, rng)
        else:
            c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        s_max = np.max(weighted_poly_log(c, p, n, s_points))
        ext = np.max(weighted_poly_log(c, p, n, outward) + 0.5 * n * q_eff)
        ratio = math.exp(ext - s_max)
        worst = max(worst, ratio)
        if ratio > 1 + rtol:
            viol += 1
    return PropertyReport(trials, viol, worst)


def _outward_points(eq, boundary: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    if eq.geometry.disc_radius is not None:
        r = eq.geometry.disc_radius
        ang = np.angle(boundary)
        return ((r + offsets)[:, None] * np.exp(1j * ang)[None, :]).ravel()
    # generic droplet: keep grid cells whose distance lies in the offset range
    c = eq.grid.centers.ravel()
    d = eq.geometry.distance(c)
    return c[(d >= offsets[0]) & (d <= offsets[-1])]


def pointwise_bound_check(eq, n: int, beta: float, rng: np.random.Generator, trials: int = 100,
                          neighbourhood: float = 0.2, points_per_trial: int = 8,
                          margin: float = 0.01, nodes: int = 16) -> PropertyReport:
    """|f(z0)|^(2 beta) <= n e^{s beta} int_{D(z0, 1/sqrt n)} |f|^(2 beta) dA at random z0.

    s is the largest Laplacian over the test neighbourhood (enlarged by the
    disc radius) plus ``margin``. The quadrature is refined until the
    decision does not change between successive levels.
    """
    p = eq.potential
    rad = 1 / math.sqrt(n)
    pts = _neighbourhood_points(eq, neighbourhood, rng, trials * points_per_trial)
    probe = _neighbourhood_points(eq, neighbourhood + rad, rng, 20000)
    s_const = float(np.max(p.laplacian(probe))) + margin
    ens = build_ensemble(p, n) if p.is_radial else None
    viol = 0
    worst = -np.inf
    for t in range(trials):
        c = random_coefficients(ens, rng) if ens is not None else rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for z0 in pts[t * points_per_trial:(t + 1) * points_per_trial]:
            lhs = 2 * beta * float(weighted_poly_log(c, p, n, np.array([z0]))[0])
            prev = None
            m = nodes
            while True:
                rhs = math.log(n) + s_const * beta + _log_disc_integral(c, p, n, beta, z0, rad, m)
                verdict = lhs <= rhs
                # stable: same verdict and the last refinement moved rhs far less than the margin
                if prev is not None and verdict == prev[0] and abs(rhs - prev[1]) < 0.1 * abs(lhs - rhs):
                    break
                if m > 256:
                    break
                prev = (verdict, rhs)
                m *= 2
            worst = max(worst, lhs - rhs)
            if not verdict:
                viol += 1
    return PropertyReport(trials * points_per_trial, viol, math.exp(worst))


def _log_disc_integral(c, p, n, beta, z0, rad, m) -> float:
    x, wx = np.polynomial.legendre.leggauss(m)
    r = 0.5 * rad * (x + 1)
    wr = 0.5 * rad * wx * r
    t = 2 * np.pi * np.arange(2 * m) / (2 * m)
    z = z0 + r[:, None] * np.exp(1j * t)[None, :]
    lv = 2 * beta * weighted_poly_log(c, p, n, z)
    lw = np.log(np.broadcast_to(wr[:, None] * (2 * np.pi / (2 * m)) / np.pi, lv.shape))
    return float(special.logsumexp(lv + lw))


def _neighbourhood_points(eq, width: float, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform points of the box within ``width`` of the droplet (inside included)."""
    x0, x1, y0, y1 = eq.grid.box
    out = []
    need = count
    while need > 0:
        z = rng.uniform(x0, x1, 4 * need) + 1j * rng.uniform(y0, y1, 4 * need)
        z = z[eq.geometry.distance(z) <= width]
        out.append(z[:need])
        need -= z[:need].size
    return np.concatenate(out)
