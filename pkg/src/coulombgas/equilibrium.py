"""Equilibrium measure, droplet, obstacle function and boundary constants.

Two routes produce an :class:`EquilibriumResult`:

* :func:`solve_radial` for radial potentials (closed form, disc droplet);
* :func:`solve_grid` which minimizes the discrete logarithmic energy
  ``sum_ij w_i w_j log(1/|z_i - z_j|) + sum_i w_i Q(z_i)`` over the
  probability simplex on a square cell grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import fft, integrate, optimize
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import cKDTree
from skimage import measure

from .potential import Potential, PotentialError, base_of, check_growth


class EquilibriumError(RuntimeError):
    pass


class GridTooSmallError(EquilibriumError):
    pass


@lru_cache(maxsize=None)
def square_self_energy_constant() -> float:
    """c such that the mean of log(1/|x - y|) over a square of side h is -log(c h).

    E log|x - y| for x, y uniform in the unit square; each coordinate
    difference has density 2 (1 - u) on [0, 1].
    """
    val, _ = integrate.dblquad(
        lambda v, u: 2.0 * (1 - u) * (1 - v) * math.log(u * u + v * v),
        0, 1, 0, 1, epsabs=1e-13, epsrel=1e-12)
    return math.exp(val)


@dataclass(frozen=True)
class GridDomain:
    """Square box [x_min, x_max] x [y_min, y_max] cut into resolution^2 cells."""

    box: tuple
    resolution: int

    def __post_init__(self):
        x0, x1, y0, y1 = self.box
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate box {self.box}")
        if not math.isclose(x1 - x0, y1 - y0, rel_tol=1e-12):
            raise ValueError("grid box must be square")

    @classmethod
    def square(cls, half_width: float, resolution: int, center: complex = 0j) -> "GridDomain":
        c = complex(center)
        return cls((c.real - half_width, c.real + half_width,
                    c.imag - half_width, c.imag + half_width), int(resolution))

    @property
    def h(self) -> float:
        return (self.box[1] - self.box[0]) / self.resolution

    @property
    def cell_area(self) -> float:
        """Cell area in dA units (Lebesgue / pi)."""
        return self.h * self.h / math.pi

    @cached_property
    def x(self) -> np.ndarray:
        return self.box[0] + self.h * (np.arange(self.resolution) + 0.5)

    @cached_property
    def y(self) -> np.ndarray:
        return self.box[2] + self.h * (np.arange(self.resolution) + 0.5)

    @cached_property
    def centers(self) -> np.ndarray:
        """Complex cell centers, indexed [i, j] with x along i."""
        return self.x[:, None] + 1j * self.y[None, :]

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return ((z.real >= self.box[0]) & (z.real <= self.box[1])
                & (z.imag >= self.box[2]) & (z.imag <= self.box[3]))


class LogKernel:
    """Matrix-free product with the grid log kernel via zero-padded FFT.

    Off-diagonal entries are log(1/|z_i - z_j|); the diagonal is the
    self-energy of a uniformly charged cell, -log(c_h h).
    """

    def __init__(self, resolution: int, h: float, workers: int = 1):
        n = resolution
        self.n = n
        self.workers = workers
        d = np.arange(-n + 1, n) * h
        dist = np.hypot(d[:, None], d[None, :])
        dist[n - 1, n - 1] = square_self_energy_constant() * h
        self._shape = (2 * n, 2 * n)
        self._kf = fft.rfft2(-np.log(dist), s=self._shape, workers=workers)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        n = self.n
        full = fft.irfft2(fft.rfft2(w, s=self._shape, workers=self.workers) * self._kf,
                          s=self._shape, workers=self.workers)
        return full[n - 1:2 * n - 1, n - 1:2 * n - 1]


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    flat = v.ravel()
    u = np.sort(flat)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


# ------------------------------------------------------------------ geometry


class DropletGeometry:
    """Boundary polylines of the droplet with point-in-droplet and distance queries.

    If ``disc_radius`` is given the droplet is the centered disc of that
    radius and queries are exact; polylines are then only informational.
    """

    def __init__(self, boundary: list, disc_radius: Optional[float] = None):
        self.boundary = [np.asarray(b, dtype=complex) for b in boundary]
        self.disc_radius = disc_radius
        segs_a, segs_b = [], []
        for ring in self.boundary:
            closed = ring if ring[0] == ring[-1] else np.append(ring, ring[0])
            segs_a.append(closed[:-1])
            segs_b.append(closed[1:])
        self._a = np.concatenate(segs_a) if segs_a else np.zeros(0, complex)
        self._b = np.concatenate(segs_b) if segs_b else np.zeros(0, complex)
        if self._a.size:
            mid = 0.5 * (self._a + self._b)
            self._tree = cKDTree(np.column_stack([mid.real, mid.imag]))
            self._half_len = 0.5 * float(np.max(np.abs(self._b - self._a)))

    @classmethod
    def disc(cls, radius: float, vertices: int = 2048) -> "DropletGeometry":
        t = 2 * np.pi * np.arange(vertices) / vertices
        return cls([radius * np.exp(1j * t)], disc_radius=radius)

    @property
    def n_components(self) -> int:
        return len(self.boundary)

    def boundary_points(self) -> np.ndarray:
        return np.concatenate(self.boundary) if self.boundary else np.zeros(0, complex)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.disc_radius is not None:
            return np.abs(z) <= self.disc_radius
        flat = z.ravel()
        inside = np.zeros(flat.shape, dtype=bool)
        ay, by = self._a.imag, self._b.imag
        ax, bx = self._a.real, self._b.real
        for start in range(0, flat.size, 2048):
            p = flat[start:start + 2048, None]
            straddle = (ay > p.imag) != (by > p.imag)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = ax + (p.imag - ay) * (bx - ax) / (by - ay)
            hits = straddle & (p.real < xcross)
            inside[start:start + 2048] = (np.count_nonzero(hits, axis=1) % 2) == 1
        return inside.reshape(z.shape)

    def _segment_distance(self, p: np.ndarray, idx: np.ndarray) -> np.ndarray:
        a = self._a[idx]
        ab = self._b[idx] - a
        denom = np.abs(ab) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom > 0, ((p - a) * np.conj(ab)).real / denom, 0.0)
        t = np.clip(t, 0.0, 1.0)
        return np.abs(p - (a + t * ab))

    def boundary_distance(self, z) -> np.ndarray:
        """Unsigned distance to the boundary polylines."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        k = min(8, self._a.size)
        dmid, idx = self._tree.query(np.column_stack([flat.real, flat.imag]), k=k)
        dmid = dmid.reshape(flat.size, k)
        idx = idx.reshape(flat.size, k)
        dist = self._segment_distance(flat[:, None], idx).min(axis=1)
        # any closer segment has its midpoint within dist + half segment length
        unsure = dmid[:, -1] <= dist + self._half_len
        for i in np.nonzero(unsure)[0]:
            cand = self._tree.query_ball_point([flat[i].real, flat[i].imag],
                                               dist[i] + self._half_len)
            if cand:
                dist[i] = min(dist[i], self._segment_distance(flat[i], np.asarray(cand)).min())
        return dist.reshape(z.shape)

    def distance(self, z) -> np.ndarray:
        """delta(z): 0 on the droplet, else distance to its boundary."""
        z = np.asarray(z, dtype=complex)
        if self.disc_radius is not None:
            return np.maximum(np.abs(z) - self.disc_radius, 0.0)
        d = self.boundary_distance(z)
        return np.where(self.contains(z), 0.0, d)

    def hausdorff_to(self, curve: Callable[[np.ndarray], np.ndarray], samples: int = 4096) -> float:
        """Symmetric Hausdorff distance to a closed parametrized curve t in [0, 1)."""
        pts = curve(np.arange(samples) / samples)
        other = DropletGeometry([pts])
        d1 = float(other.boundary_distance(self.boundary_points()).max())
        d2 = float(self.boundary_distance(pts).max())
        return max(d1, d2)


def extract_boundary(mask: np.ndarray, grid: GridDomain, min_cells: int = 4) -> list:
    """Marching squares at level 0.5; tiny components dropped.

    ``mask`` may be boolean or a fill fraction in [0, 1] (the latter places
    the contour inside partially filled boundary cells).
    """
    padded = np.pad(np.clip(np.asarray(mask, dtype=float), 0.0, 1.0), 1)
    rings = []
    for c in measure.find_contours(padded, 0.5):
        ij = c - 1.0
        z = (grid.box[0] + grid.h * (ij[:, 0] + 0.5)) + 1j * (grid.box[2] + grid.h * (ij[:, 1] + 0.5))
        area = 0.5 * abs(np.sum(z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag))
        if area >= min_cells * grid.h ** 2:
            rings.append(z[:-1] if z[0] == z[-1] else z)
    return rings


# -------------------------------------------------------------------- result


class FloorConstants(NamedTuple):
    a0: float
    violation_count: int
    delta0: float


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    potential: Potential
    grid: GridDomain
    sigma_weights: np.ndarray
    droplet_mask: np.ndarray
    coincidence_mask: np.ndarray
    q_check: np.ndarray
    q_eff: np.ndarray
    frostman_const: float
    robin_const: float
    c0: float
    a0: float
    geometry: DropletGeometry
    method: str
    residual: float = 0.0
    iterations: int = 0
    radius: Optional[float] = None
    delta0: float = 0.0
    q_eff_exact: Optional[Callable] = field(default=None, repr=False)

    @property
    def tol(self) -> float:
        return 1e-3 * max(1.0, abs(self.frostman_const))

    @cached_property
    def q_values(self) -> np.ndarray:
        return base_of(self.potential).evaluate(self.grid.centers)

    @cached_property
    def laplacian_values(self) -> np.ndarray:
        return base_of(self.potential).laplacian(self.grid.centers)

    @cached_property
    def density(self) -> np.ndarray:
        """Density of sigma with respect to dA, per cell."""
        return self.sigma_weights / self.grid.cell_area

    @cached_property
    def cell_delta(self) -> np.ndarray:
        return self.geometry.distance(self.grid.centers)

    @cached_property
    def _interp(self):
        return RegularGridInterpolator((self.grid.x, self.grid.y), self.q_eff,
                                       bounds_error=False, fill_value=None)

    def sigma_integral(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """sigma(f) by cell quadrature."""
        return float(np.sum(self.sigma_weights * f(self.grid.centers)))


def effective_potential(eq: EquilibriumResult, z) -> np.ndarray:
    """Q_eff = Q - Q_check at arbitrary points, clamped at 0.

    Inside the box: closed form for radial solves, bilinear interpolation
    otherwise. Outside: the far-field form Q - 2 log|z| - gamma.
    """
    z = np.asarray(z, dtype=complex)
    q = base_of(eq.potential).evaluate(z)
    with np.errstate(divide="ignore"):
        far = q - 2 * np.log(np.abs(z)) - eq.frostman_const
    if eq.q_eff_exact is not None:
        near = eq.q_eff_exact(z)
    else:
        pts = np.stack([np.clip(z.real, eq.grid.x[0], eq.grid.x[-1]),
                        np.clip(z.imag, eq.grid.y[0], eq.grid.y[-1])], axis=-1)
        near = eq._interp(pts)
    out = np.where(eq.grid.contains(z), near, far)
    return np.maximum(out, 0.0)


def distance_to_droplet(geo, z) -> np.ndarray:
    if isinstance(geo, EquilibriumResult):
        geo = geo.geometry
    return geo.distance(z)


def boundary_min_laplacian(eq: EquilibriumResult) -> float:
    """c0 = min of Delta Q over the droplet boundary."""
    if eq.radius is not None:
        c0 = float(base_of(eq.potential).laplacian(np.array([eq.radius + 0j]))[0])
    else:
        c0 = float(base_of(eq.potential).laplacian(eq.geometry.boundary_points()).min())
    if not c0 > 0:
        raise PotentialError(f"c0 = {c0:.4g} <= 0: Q not strictly subharmonic on the boundary")
    return c0


def exterior_floor_constants(eq: EquilibriumResult, c: float) -> FloorConstants:
    """Certified floor Q_eff >= 2 min(c delta^2, a0) on exterior grid cells.

    delta0 is the largest cell distance up to which Q_eff >= 2 c delta^2 - tol
    holds for every cell; a0 is half the minimum of Q_eff beyond delta0.
    """
    if c < 0:
        raise ValueError("c must be nonnegative")
    if c >= eq.c0:
        raise ValueError(f"c = {c} must be below c0 = {eq.c0}")
    tol = eq.tol
    delta = eq.cell_delta
    ext = delta > 0
    d = delta[ext]
    qe = eq.q_eff[ext]
    if d.size == 0:
        return FloorConstants(0.0, 0, 0.0)
    order = np.argsort(d, kind="stable")
    d, qe = d[order], qe[order]
    ok = qe >= 2 * c * d * d - tol
    if ok.all():
        delta0 = float(d[-1])
    else:
        first_bad = int(np.argmin(ok))
        delta0 = float(d[first_bad - 1]) if first_bad > 0 else 0.0
    a0 = 0.5 * float(qe[d >= delta0].min())
    floor = 2 * np.minimum(c * d * d, a0)
    violations = int(np.count_nonzero(qe < floor - tol))
    return FloorConstants(a0, violations, delta0)


# ------------------------------------------------------------------- solvers


def _validate_box(eq_mask: np.ndarray, grid: GridDomain, name: str):
    idx = np.argwhere(eq_mask)
    if idx.size == 0:
        raise EquilibriumError("empty droplet")
    n = grid.resolution
    if idx.min() < 2 or idx.max() > n - 3:
        raise GridTooSmallError(f"{name}: droplet touches the grid box {grid.box}")
    xs = grid.x[idx[:, 0]]
    ys = grid.y[idx[:, 1]]
    margin = min(xs.min() - grid.box[0], grid.box[1] - xs.max(),
                 ys.min() - grid.box[2], grid.box[3] - ys.max()) - grid.h / 2
    if margin < 0.5 - grid.h:
        warnings.warn(f"{name}: droplet margin {margin:.3f} below 0.5", stacklevel=3)


def _finish(p, grid, w, q, u, method, residual, iterations, geometry=None,
            radius=None, q_eff_exact=None, floor_c: float = 0.9):
    area = grid.cell_area
    lap = base_of(p).laplacian(grid.centers)
    dens = w / area
    droplet = (w > 0) & (dens >= 0.5 * lap)
    interior = droplet.copy()
    interior[1:, :] &= droplet[:-1, :]
    interior[:-1, :] &= droplet[1:, :]
    interior[:, 1:] &= droplet[:, :-1]
    interior[:, :-1] &= droplet[:, 1:]
    if q_eff_exact is None:
        core = interior if interior.any() else droplet
        gamma = float(np.median((q + 2 * u)[core]))
        q_check = np.minimum(q, -2 * u + gamma)
        q_eff = q - q_check
    else:
        gamma = None
        q_eff = q_eff_exact(grid.centers)
        q_check = q - q_eff
    return dens, droplet, q_check, q_eff, gamma


def solve_grid(p: Potential, grid: GridDomain, tol: float = 1e-7, max_iter: int = 20000,
               check_every: int = 25, workers: int = 1, allow_coarse: bool = False,
               floor_c: float = 0.9) -> EquilibriumResult:
    """Minimize the discrete log energy over the simplex by projected gradient.

    Barzilai-Borwein steps, exact simplex projection every iteration.
    Converged when the Frostman complementarity residual
    max_i |min(rho_i, Q_i + 2 U_i - gamma)| <= tol (1 + |gamma|), with rho
    the cell density with respect to dA.
    """
    if grid.resolution < 128 and not allow_coarse:
        raise ValueError("grid resolution must be at least 128")
    q_full = base_of(p)
    half = 0.5 * (grid.box[1] - grid.box[0])
    check_growth(q_full, max(half / 2, 0.2))
    z = grid.centers
    q = q_full.evaluate(z)
    finite = np.isfinite(q) & q_full.finite_domain(z)
    qf = np.where(finite, q, 0.0)
    big = np.max(qf[finite]) + 1e3 if finite.any() else 1e3
    q_work = np.where(finite, qf, big)
    kern = LogKernel(grid.resolution, grid.h, workers=workers)
    area = grid.cell_area

    lap = np.maximum(q_full.laplacian(z), 0)
    lap = np.where(finite, np.nan_to_num(lap), 0.0)
    start = finite & (q_work <= q_work[finite].min() + 1.0)
    w = np.where(start, lap + 1e-12, 0.0)
    w /= w.sum()

    g = 2 * kern(w) + q_work
    step = 0.1 * area
    residual = np.inf
    gamma = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        w_new = project_simplex(w - step * g)
        w_new[~finite] = 0.0
        g_new = 2 * kern(w_new) + q_work
        s = (w_new - w).ravel()
        yv = (g_new - g).ravel()
        sy = float(s @ yv)
        if sy > 0:
            step = float(s @ s) / sy
        w, g = w_new, g_new
        if it % check_every == 0:
            supp = w > 1e-3 * w.max()
            gamma = float(np.median(g[supp]))
            residual = float(np.max(np.abs(np.minimum(w / area, g - gamma))))
            if residual <= tol * (1 + abs(gamma)):
                break
    else:
        raise EquilibriumError(
            f"no convergence in {max_iter} iterations (residual {residual:.3g})")

    u = 0.5 * (g - q_work)
    _, droplet, q_check, q_eff, gamma = _finish(p, grid, w, q_work, u, "grid", residual, it)
    _validate_box(droplet, grid, q_full.name)
    lap_c = base_of(p).laplacian(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        fill = np.where(lap_c > 0, w / area / lap_c, 0.0)
    geometry = DropletGeometry(extract_boundary(np.where(droplet | _dilate(droplet, 1), fill, 0.0), grid))
    robin = float(np.sum(w * u) + np.sum(w * q_work))
    coincidence = q_eff <= _coincidence_tol(p, grid, droplet, gamma)
    eq = EquilibriumResult(
        potential=p, grid=grid, sigma_weights=w, droplet_mask=droplet,
        coincidence_mask=coincidence, q_check=q_check, q_eff=q_eff,
        frostman_const=gamma, robin_const=robin, c0=np.nan, a0=np.nan,
        geometry=geometry, method="grid", residual=residual, iterations=it)
    return _with_constants(eq, floor_c)


def _coincidence_tol(p, grid, droplet, gamma) -> float:
    # below Q_eff one cell outside the boundary (about 2 Delta Q h^2)
    lap = base_of(p).laplacian(grid.centers[droplet])
    return min(1e-3 * max(1.0, abs(gamma)), float(np.median(lap)) * grid.h ** 2)


def _with_constants(eq: EquilibriumResult, floor_c: float) -> EquilibriumResult:
    from dataclasses import replace

    c0 = boundary_min_laplacian(eq)
    eq = replace(eq, c0=c0)
    lem = exterior_floor_constants(eq, floor_c * c0)
    return replace(eq, a0=lem.a0, delta0=lem.delta0)


def radial_radius(p: Potential, r_max: float = 1e6) -> float:
    """Solve r Q'(r) = 2 for the droplet radius."""
    if p.radial_derivative is None:
        raise PotentialError(f"{p.name} has no radial profile")
    f = lambda r: r * float(p.radial_derivative(np.array(r))) - 2.0
    lo, hi = 1e-12, 1.0
    while f(hi) < 0:
        hi *= 2
        if hi > r_max:
            raise PotentialError(f"{p.name}: r Q'(r) - 2 has no sign change")
    if f(lo) >= 0:
        raise PotentialError(f"{p.name}: r Q'(r) - 2 has no sign change")
    rs = np.linspace(lo, 2 * hi, 2001)
    vals = rs * p.radial_derivative(rs)
    if np.any(np.diff(vals) < -1e-12 * np.abs(vals[1:])):
        raise PotentialError(f"{p.name}: r Q'(r) not increasing, droplet may not be a disc")
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def solve_radial(p: Potential, grid: Optional[GridDomain] = None, resolution: int = 256,
                 floor_c: float = 0.9, supersample: int = 8):
    """Closed-form equilibrium data for a radial potential.

    Returns (R, EquilibriumResult). The grid fields are the exact density
    averaged over cells, renormalized to unit mass.
    """
    R = radial_radius(p)
    prof = p.radial_profile
    if grid is None:
        grid = GridDomain.square(2.0 * R, resolution)
    qR = float(prof(np.array(R)))
    gamma = qR - 2 * math.log(R)
    sigma_q, _ = integrate.quad(
        lambda r: float(prof(np.array(r))) * 2 * r * float(p.laplacian(np.array(r + 0j))),
        0, R, epsabs=1e-14, epsrel=1e-13, limit=200)
    robin = 0.5 * (gamma + sigma_q)

    def q_eff_exact(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        with np.errstate(divide="ignore"):
            outside = prof(r) - qR - 2 * np.log(np.where(r > 0, r, 1.0) / R)
        return np.where(r > R, np.maximum(outside, 0.0), 0.0)

    # cell-averaged exact density
    s = supersample
    offs = (np.arange(s) + 0.5) / s - 0.5
    sub = (offs[:, None] + 1j * offs[None, :]).ravel() * grid.h
    zc = grid.centers
    w = np.zeros(zc.shape)
    for o in sub:
        zz = zc + o
        w += np.where(np.abs(zz) <= R, p.laplacian(zz), 0.0)
    w *= grid.cell_area / sub.size
    w /= w.sum()

    q = p.evaluate(zc)
    q_eff = q_eff_exact(zc)
    droplet = np.abs(zc) <= R
    _validate_box(droplet, grid, p.name)
    eq = EquilibriumResult(
        potential=p, grid=grid, sigma_weights=w, droplet_mask=droplet,
        coincidence_mask=q_eff <= _coincidence_tol(p, grid, droplet, gamma),
        q_check=q - q_eff, q_eff=q_eff, frostman_const=gamma, robin_const=robin,
        c0=np.nan, a0=np.nan, geometry=DropletGeometry.disc(R), method="radial",
        radius=R, q_eff_exact=q_eff_exact)
    return R, _with_constants(eq, floor_c)


def solve(p: Potential, grid: Optional[GridDomain] = None, method: str = "auto", **kw) -> EquilibriumResult:
    """Radial closed form when available, else the grid solver."""
    base = base_of(p)
    if method == "radial" or (method == "auto" and base.is_radial):
        _, eq = solve_radial(base, grid=grid)
        return eq
    if grid is None:
        grid = GridDomain.square(2.25, 256)
    return solve_grid(base, grid, **kw)


# ---------------------------------------------------------------- invariants


def discrete_quarter_laplacian(f: np.ndarray, h: float) -> np.ndarray:
    out = np.full(f.shape, np.nan)
    out[1:-1, 1:-1] = (f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2]
                       - 4 * f[1:-1, 1:-1]) / (4 * h * h)
    return out


def _dilate(mask: np.ndarray, rings: int = 1) -> np.ndarray:
    out = mask.copy()
    for _ in range(rings):
        m = out.copy()
        m[1:, :] |= out[:-1, :]
        m[:-1, :] |= out[1:, :]
        m[:, 1:] |= out[:, :-1]
        m[:, :-1] |= out[:, 1:]
        out = m
    return out


def check_invariants(eq: EquilibriumResult) -> dict:
    """Evaluate the equilibrium invariants; returns name -> (ok, measured value)."""
    tol = eq.tol
    h = eq.grid.h
    res = {}
    mass = float(eq.sigma_weights.sum())
    res["mass"] = (abs(mass - 1) <= 1e-8, mass)
    res["sigma_nonnegative"] = (bool(eq.sigma_weights.min() >= 0), float(eq.sigma_weights.min()))
    res["q_eff_nonnegative"] = (bool(eq.q_eff.min() >= -tol), float(eq.q_eff.min()))
    on_s = float(eq.q_eff[eq.droplet_mask].max())
    res["q_eff_zero_on_droplet"] = (on_s <= tol, on_s)
    stray = eq.droplet_mask & ~_dilate(eq.coincidence_mask, 1)
    res["droplet_in_coincidence"] = (not stray.any(), int(stray.sum()))
    shallow = eq.coincidence_mask & ~_dilate(eq.droplet_mask, 1)
    res["coincidence_equals_droplet"] = (not shallow.any(), int(shallow.sum()))
    lap = discrete_quarter_laplacian(eq.q_check, h)
    lap_scale = float(np.nanmax(np.abs(eq.laplacian_values[eq.droplet_mask])))
    valid = ~np.isnan(lap)
    res["q_check_subharmonic"] = (bool(np.nanmin(lap) >= -0.05 * lap_scale), float(np.nanmin(lap)))
    away = valid & ~_dilate(eq.coincidence_mask, 2)
    harm = float(np.max(np.abs(lap[away]))) if away.any() else 0.0
    res["q_check_harmonic_off_coincidence"] = (harm <= 0.05 * lap_scale, harm)
    deep = eq.droplet_mask & (eq.geometry.boundary_distance(eq.grid.centers) > 3 * h)
    if eq.radius is None:
        deep &= ~_dilate(~eq.droplet_mask, 3)
    rel = np.abs(eq.density[deep] - eq.laplacian_values[deep]) / np.maximum(eq.laplacian_values[deep], 1e-300)
    lap_ok = eq.laplacian_values[deep] > 0.05 * lap_scale
    dens_err = float(np.max(rel[lap_ok])) if lap_ok.any() else 0.0
    res["density_matches_laplacian"] = (dens_err <= 0.02, dens_err)
    frame = np.zeros(eq.q_check.shape, dtype=bool)
    frame[[0, -1], :] = True
    frame[:, [0, -1]] = True
    zf = eq.grid.centers[frame]
    dev = eq.q_check[frame] - 2 * np.log(np.abs(zf)) - eq.frostman_const
    res["q_check_log_growth"] = (float(np.max(np.abs(dev))) <= 0.5, float(np.max(np.abs(dev))))
    if eq.method == "grid":
        r_ok = eq.residual <= 1e-4 * (1 + abs(eq.frostman_const))
        res["frostman_residual"] = (r_ok, eq.residual)
    return res
