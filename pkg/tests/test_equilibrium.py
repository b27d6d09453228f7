import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from coulombgas import equilibrium as eqm
from coulombgas import potential as pot


# ------------------------------------------------------------------ oracles


def uniform_disc_potential(r, radius=1.0, nodes=400):
    """U(z) = int log 1/|z - w| dsigma(w) for sigma uniform on a disc, by
    polar integration around z (inner radial integral in closed form)."""
    theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    # distance from z = r to the circle along direction theta
    b = r * np.cos(theta)
    reach = -b + np.sqrt(b * b - r * r + radius * radius)
    inner = reach ** 2 / 4 - reach ** 2 / 2 * np.log(reach)
    return float(np.mean(inner) * 2 / radius ** 2)


def uniform_ellipse_potential(z, a, b, nodes=2000):
    """Same for the uniform probability measure on the ellipse x^2/a^2 + y^2/b^2 <= 1."""
    theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    dx, dy = np.cos(theta), np.sin(theta)
    x0, y0 = z.real, z.imag
    qa = dx * dx / a ** 2 + dy * dy / b ** 2
    qb = 2 * (x0 * dx / a ** 2 + y0 * dy / b ** 2)
    qc = x0 * x0 / a ** 2 + y0 * y0 / b ** 2 - 1
    reach = (-qb + np.sqrt(qb * qb - 4 * qa * qc)) / (2 * qa)
    inner = reach ** 2 / 4 - reach ** 2 / 2 * np.log(reach)
    return float(np.mean(inner) * 2 / (a * b))


def test_disc_potential_oracle_closed_form():
    # U = (1 - r^2)/2 inside the unit disc for the uniform measure
    for r in (0.0, 0.3, 0.7, 0.95):
        assert uniform_disc_potential(r) == pytest.approx((1 - r * r) / 2, abs=1e-10)


def test_robin_constant_oracle():
    # I[sigma] = int U dsigma + int Q dsigma for the uniform unit disc
    u_int, _ = integrate.quad(lambda r: uniform_disc_potential(r) * 2 * r, 0, 1, epsabs=1e-10)
    q_int, _ = integrate.quad(lambda r: r * r * 2 * r, 0, 1)
    assert u_int + q_int == pytest.approx(0.75, abs=1e-8)


def test_elliptic_candidate_satisfies_frostman():
    tau = 0.5
    p = pot.elliptic(tau)
    a, b = 1 + tau, 1 - tau
    z = np.array([0.0, 0.5 + 0.2j, -1.0 + 0.1j, 0.3j, 1.2 - 0.05j])
    vals = [p.evaluate(np.array([w]))[0] + 2 * uniform_ellipse_potential(w, a, b) for w in z]
    assert np.ptp(vals) < 1e-8


def test_self_energy_constant_closed_form():
    exact = 2 ** (1 / 3) * math.exp(math.pi / 3 - 25 / 12)
    assert eqm.square_self_energy_constant() == pytest.approx(exact, rel=1e-12)


# -------------------------------------------------------------- building blocks


def test_log_kernel_matches_dense_sum(rng):
    n, h = 12, 0.1
    g = eqm.GridDomain.square(n * h / 2, n)
    w = rng.random((n, n))
    z = g.centers.ravel()
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, eqm.square_self_energy_constant() * g.h)
    dense = (-np.log(d) @ w.ravel()).reshape(n, n)
    np.testing.assert_allclose(eqm.LogKernel(n, g.h)(w), dense, rtol=1e-10, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=st.floats(-5, 5)))
def test_project_simplex_kkt(v):
    w = eqm.project_simplex(v)
    assert np.all(w >= 0)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    pos = w > 0
    shift = v[pos] - w[pos]
    assert np.ptp(shift) < 1e-9
    # inactive entries lie below the threshold
    assert np.all(v[~pos] <= shift[0] + 1e-9)


def test_discrete_laplacian_of_quadratic():
    g = eqm.GridDomain.square(1.0, 32)
    lap = eqm.discrete_quarter_laplacian(np.abs(g.centers) ** 2, g.h)
    np.testing.assert_allclose(lap[1:-1, 1:-1], 1.0, rtol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(0.2, 2.0))
def test_disc_geometry_distance(x, y, radius):
    geo = eqm.DropletGeometry.disc(radius)
    z = np.array([complex(x, y)])
    assert geo.distance(z)[0] == pytest.approx(max(abs(z[0]) - radius, 0.0), abs=1e-12)
    if abs(abs(z[0]) - radius) > 1e-12:   # membership on the circle is round-off
        assert bool(geo.contains(z)[0]) == (abs(z[0]) <= radius)


def test_polygon_geometry_distance():
    geo = eqm.DropletGeometry([np.array([1, 1j, -1, -1j]) * math.sqrt(2)])
    assert geo.distance(np.array([3.0 + 0j]))[0] == pytest.approx(3 - math.sqrt(2), abs=1e-12)
    assert geo.distance(np.array([0.2 + 0.1j]))[0] == 0.0
    assert geo.n_components == 1


def test_extract_boundary_of_disc_mask():
    g = eqm.GridDomain.square(2.0, 128)
    rings = eqm.extract_boundary(np.abs(g.centers) <= 1.0, g)
    assert len(rings) == 1
    assert np.max(np.abs(np.abs(rings[0]) - 1.0)) < g.h


def test_extract_boundary_drops_specks():
    g = eqm.GridDomain.square(2.0, 64)
    mask = np.zeros((64, 64), dtype=bool)
    mask[10, 10] = True
    assert eqm.extract_boundary(mask, g) == []


# ------------------------------------------------------------------ radial


def test_radial_ginibre(ginibre_radial):
    eq = ginibre_radial
    assert eq.radius == pytest.approx(1.0, abs=1e-12)
    assert eq.c0 == pytest.approx(1.0, abs=1e-12)
    assert eq.frostman_const == pytest.approx(1.0, abs=1e-12)
    assert eq.robin_const == pytest.approx(0.75, abs=1e-12)
    inside = eq.droplet_mask & (eq.geometry.boundary_distance(eq.grid.centers) > 2 * eq.grid.h)
    np.testing.assert_allclose(eq.density[inside], 1.0, rtol=2e-4)


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0, 3.0])
def test_radial_power_radius(b):
    assert eqm.radial_radius(pot.power(b)) == pytest.approx(b ** (-1 / (2 * b)), rel=1e-12)


def test_radial_requires_profile():
    with pytest.raises(pot.PotentialError):
        eqm.solve_radial(pot.elliptic(0.5))


def test_grid_too_small():
    with pytest.raises(eqm.GridTooSmallError):
        eqm.solve_radial(pot.ginibre(), grid=eqm.GridDomain.square(1.0, 128))


def test_effective_potential_hand_values(ginibre_radial):
    eq = ginibre_radial
    qe = eqm.effective_potential(eq, np.array([1.2 + 0j, 0.5j, 1.05, 10.0]))
    assert qe[0] == pytest.approx(1.44 - 2 * math.log(1.2) - 1, abs=1e-12)
    assert qe[1] == 0.0
    assert qe[2] == pytest.approx(2 * 0.05 ** 2, rel=0.1)
    assert qe[3] == pytest.approx(100 - 2 * math.log(10) - 1, rel=1e-12)


def test_distance_to_droplet_disc(ginibre_radial):
    d = eqm.distance_to_droplet(ginibre_radial, np.array([1.5, 0.0]))
    np.testing.assert_allclose(d, [0.5, 0.0], atol=1e-12)


def test_exterior_floor_constants_radial(ginibre_radial):
    a0, viol, delta0 = eqm.exterior_floor_constants(ginibre_radial, 0.9)
    assert viol == 0 and a0 > 0 and delta0 > 0
    assert eqm.exterior_floor_constants(ginibre_radial, 0.0).violation_count == 0
    with pytest.raises(ValueError):
        eqm.exterior_floor_constants(ginibre_radial, 1.0)
    with pytest.raises(ValueError):
        eqm.exterior_floor_constants(ginibre_radial, -0.1)


def test_exterior_floor_near_c0_on_coarse_grid():
    _, eq = eqm.solve_radial(pot.ginibre(), resolution=64)
    res = eqm.exterior_floor_constants(eq, 0.99)
    assert res.violation_count >= 0 and res.a0 > 0


# -------------------------------------------------------------------- grid


def test_grid_ginibre_constants(ginibre_grid):
    eq = ginibre_grid
    h = eq.grid.h
    assert eq.method == "grid"
    assert eq.geometry.hausdorff_to(lambda t: np.exp(2j * np.pi * t)) <= 2 * h
    assert eq.c0 == pytest.approx(1.0, abs=0.02)
    assert eq.frostman_const == pytest.approx(1.0, abs=0.01)
    assert eq.robin_const == pytest.approx(0.75, abs=0.01)
    assert eqm.boundary_min_laplacian(eq) == 1.0


def test_grid_invariants(ginibre_grid, elliptic_grid, power2_grid):
    for eq in (ginibre_grid, elliptic_grid, power2_grid):
        inv = eqm.check_invariants(eq)
        failed = {k: v for k, v in inv.items() if not v[0]}
        assert not failed, (eq.potential.name, failed)
        assert eq.sigma_weights.sum() == pytest.approx(1.0, abs=1e-8)
        assert eq.sigma_weights.min() >= 0
        assert np.all(eq.q_check <= eq.q_values + eq.tol)


def test_grid_elliptic(elliptic_grid):
    eq = elliptic_grid
    a, b = 1.5, 0.5
    pts = eq.geometry.boundary_points()
    assert np.max(np.abs(pts.real)) == pytest.approx(a, abs=0.02)
    assert np.max(np.abs(pts.imag)) == pytest.approx(b, abs=0.02)
    assert eq.geometry.hausdorff_to(lambda t: a * np.cos(2 * np.pi * t) + 1j * b * np.sin(2 * np.pi * t)) <= 0.02
    assert eq.c0 == pytest.approx(4 / 3, abs=0.02)
    assert eqm.distance_to_droplet(eq, np.array([2.0 + 0j]))[0] == pytest.approx(0.5, abs=2 * eq.grid.h)


def test_grid_power2(power2_grid):
    eq = power2_grid
    R = 2 ** (-0.25)
    assert eq.c0 == pytest.approx(4 * 2 ** -0.5, abs=0.05)
    assert eq.geometry.hausdorff_to(lambda t: R * np.exp(2j * np.pi * t)) <= 2 * eq.grid.h
    _, ref = eqm.solve_radial(pot.power(2.0))
    assert eq.robin_const == pytest.approx(ref.robin_const, abs=1e-2)


@pytest.mark.parametrize("name", ["ginibre_grid", "elliptic_grid", "power2_grid", "ginibre_radial"])
def test_exterior_floor_all_builtins(name, request):
    eq = request.getfixturevalue(name)
    assert eqm.exterior_floor_constants(eq, 0.9 * eq.c0).violation_count == 0


def test_effective_potential_grid(ginibre_grid):
    qe = eqm.effective_potential(ginibre_grid, np.array([1.2 + 0j, 0.0, 0.3 - 0.4j]))
    assert qe[0] == pytest.approx(1.44 - 2 * math.log(1.2) - 1, abs=2e-3)
    assert qe[1] <= ginibre_grid.tol and qe[2] <= ginibre_grid.tol


def test_power_one_matches_ginibre_cellwise(ginibre_grid):
    eq = eqm.solve_grid(pot.power(1.0), eqm.GridDomain.square(2.0, 256), workers=2)
    np.testing.assert_array_equal(eq.sigma_weights, ginibre_grid.sigma_weights)
    np.testing.assert_array_equal(eq.droplet_mask, ginibre_grid.droplet_mask)


def test_grid_resolution_guard():
    with pytest.raises(ValueError):
        eqm.solve_grid(pot.ginibre(), eqm.GridDomain.square(2.0, 32))
