import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coulombgas import analysis as an
from coulombgas import potential as pot
from coulombgas import sampler as smp

points = st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=2, max_size=12,
                  unique=True).map(lambda xy: np.array([complex(x, y) for x, y in xy]))


def brute_hamiltonian(z, p):
    z = np.asarray(z)
    n = z.size
    pair = sum(-math.log(abs(z[j] - z[k])) for j in range(n) for k in range(n) if j != k)
    return pair + n * float(np.sum(p.evaluate(z)))


def hard_wall():
    """|z|^2 inside the unit disc, +inf outside (no compiled code)."""
    def evaluate(z):
        z = np.asarray(z, dtype=complex)
        return np.where(np.abs(z) <= 1, np.abs(z) ** 2, np.inf)

    return pot.Potential("wall", evaluate, lambda z: np.ones(np.shape(z)),
                         lambda z: np.abs(np.asarray(z)) <= 1, np.inf)


# ------------------------------------------------------------------ energies


def test_hamiltonian_hand_values(ginibre):
    assert smp.hamiltonian([0, 1], ginibre) == pytest.approx(2.0, abs=1e-14)
    assert smp.hamiltonian([0, 0.5], ginibre) == pytest.approx(2 * math.log(2) + 0.5, abs=1e-14)
    assert smp.hamiltonian([0.3 + 0.4j], ginibre) == pytest.approx(0.25)
    assert smp.hamiltonian([0.1, 0.1], ginibre) == math.inf
    assert smp.hamiltonian([0.1, 2.0], hard_wall()) == math.inf


@settings(max_examples=100, deadline=None)
@given(points)
def test_hamiltonian_matches_brute_force(z):
    p = pot.elliptic(0.3)
    assert smp.hamiltonian(z, p) == pytest.approx(brute_hamiltonian(z, p), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(points, st.randoms(use_true_random=False))
def test_exchangeability(z, r):
    perm = list(range(z.size))
    r.shuffle(perm)
    p = pot.power(2.0)
    assert smp.hamiltonian(z[perm], p) == pytest.approx(smp.hamiltonian(z, p), rel=1e-12, abs=1e-12)


def test_move_delta_examples(ginibre, rng):
    st_ = smp.ChainState(np.array([0, 1 + 0j]), ginibre, 1.0, rng)
    assert smp.move_delta(st_, 1, 1 + 0j) == 0.0
    assert smp.move_delta(st_, 1, 0.5 + 0j) == pytest.approx(2 * math.log(2) + 0.5 - 2, abs=1e-14)
    assert smp.move_delta(st_, 1, 0j) == math.inf


@settings(max_examples=100, deadline=None)
@given(points, st.integers(0, 100), st.floats(-1, 1), st.floats(-1, 1))
def test_move_delta_antisymmetric_and_exact(z, j, dx, dy):
    j = j % z.size
    zn = z[j] + complex(dx, dy)
    if np.any(np.abs(np.delete(z, j) - zn) < 1e-6) or (dx == 0 and dy == 0):
        return
    p = pot.ginibre()
    a = smp.ChainState(z, p, 1.0, np.random.default_rng(0))
    fwd = smp.move_delta(a, j, zn)
    moved = z.copy()
    moved[j] = zn
    b = smp.ChainState(moved, p, 1.0, np.random.default_rng(0))
    rev = smp.move_delta(b, j, z[j])
    assert fwd == pytest.approx(-rev, abs=1e-12 * max(1.0, abs(fwd)))
    assert fwd == pytest.approx(smp.hamiltonian(moved, p) - smp.hamiltonian(z, p), abs=1e-9)


@pytest.mark.parametrize("beta", [0.5, 1.0, 3.0])
def test_detailed_balance(beta, rng):
    p = pot.elliptic(0.4)
    z = rng.normal(size=6) + 1j * rng.normal(size=6)
    state = smp.ChainState(z, p, beta, rng, step_scale=0.7)
    for j in range(6):
        a = z[j]
        b = a + 0.2 * (rng.normal() + 1j * rng.normal())
        fwd = smp.transition_density(state, j, a, b)
        rev = smp.transition_density(state, j, b, a)
        d_h = smp.move_delta(state, j, b)
        assert math.log(fwd) - math.log(rev) == pytest.approx(-beta * d_h, abs=1e-10)


# ------------------------------------------------------------------ sweeps


def test_zero_beta_accepts_everything_in_box(rng):
    box = (-1.0, 1.0, -1.0, 1.0)
    state = smp.ChainState(np.array([0.1, -0.2j, 0.3 + 0.3j]), pot.ginibre(), 0.0, rng, 0.2, box=box)
    for _ in range(200):
        smp.metropolis_sweep(state)
    # every rejection comes from leaving the box
    assert state.acceptance_rate > 0.8
    assert np.all(np.abs(state.points.real) <= 1) and np.all(np.abs(state.points.imag) <= 1)


def test_zero_beta_large_box_accepts_all(rng):
    state = smp.ChainState(np.array([0.1, -0.2j, 0.3 + 0.3j]), pot.ginibre(), 0.0, rng, 0.1)
    for _ in range(100):
        smp.metropolis_sweep(state)
    assert state.accepted == state.proposed


def test_infinite_energy_rejected(rng):
    state = smp.ChainState(np.array([0.5, -0.5, 0.5j]), hard_wall(), 1.0, rng, step_scale=2.0)
    for _ in range(300):
        smp.metropolis_sweep(state)
        assert np.all(np.abs(state.points) <= 1)
    assert 0 < state.accepted < state.proposed
    assert state.consistency_error() < 1e-9


def test_python_and_compiled_sweeps_agree():
    z = np.array([0.1 + 0.2j, -0.4, 0.3 - 0.5j, 0.7j])
    p = pot.power(2.0)
    slow = replace(p, jit_code=None)
    a = smp.ChainState(z, p, 1.3, np.random.default_rng(5))
    b = smp.ChainState(z, slow, 1.3, np.random.default_rng(5))
    for _ in range(50):
        smp.metropolis_sweep(a)
        smp.metropolis_sweep(b)
    np.testing.assert_allclose(a.points, b.points, rtol=0, atol=1e-12)
    assert a.accepted == b.accepted
    assert a.energy == pytest.approx(b.energy, rel=1e-10)


def test_perturbed_compiled_matches_python():
    pp = pot.perturb(pot.ginibre(), pot.gaussian_bump(0.8, 0.2j, 0.3), n=4)
    assert pp.jit_code is not None
    z = np.array([0.1 + 0.2j, -0.4, 0.3 - 0.5j, 0.7j])
    a = smp.ChainState(z, pp, 1.0, np.random.default_rng(9))
    b = smp.ChainState(z, replace(pp, jit_code=None), 1.0, np.random.default_rng(9))
    for _ in range(30):
        smp.metropolis_sweep(a)
        smp.metropolis_sweep(b)
    np.testing.assert_allclose(a.points, b.points, atol=1e-12)


def test_energy_cache_coherent(ginibre_radial):
    params = smp.ChainParams(n=24, beta=1.0, sweeps=2000, burn_in=200, seed=3, check_every=500)
    batch = smp.run_chain(params, pot.ginibre(), ginibre_radial)
    assert batch.metadata["max_energy_drift"] < 1e-9
    for k in (0, 777, batch.n_samples - 1):
        assert batch.energy[k] == pytest.approx(smp.hamiltonian(batch.configs[k], pot.ginibre()), rel=1e-9)


def test_single_particle_gaussian_moment(ginibre_radial):
    # stationary law prop. to exp(-2|z|^2): E|z|^2 = 1/2
    params = smp.ChainParams(n=1, beta=2.0, sweeps=100_000, burn_in=1000, seed=11)
    batch = smp.run_chain(params, pot.ginibre(), ginibre_radial)
    x = np.abs(batch.configs[:, 0]) ** 2
    se = an.blocked_standard_error(x)
    assert abs(x.mean() - 0.5) <= 3 * se


# ------------------------------------------------------------------ chains


def test_identical_seeds_bit_identical(ginibre_radial):
    params = smp.ChainParams(n=16, beta=1.0, sweeps=500, burn_in=100, seed=42)
    a = smp.run_chain(params, pot.ginibre(), ginibre_radial)
    b = smp.run_chain(params, pot.ginibre(), ginibre_radial)
    for x, y in ((a.configs, b.configs), (a.dn, b.dn), (a.energy, b.energy), (a.acceptance, b.acceptance)):
        assert np.array_equal(x, y)
    c = smp.run_chain(replace(params, seed=43), pot.ginibre(), ginibre_radial)
    assert not np.array_equal(a.configs, c.configs)


def test_parallel_chains_match_serial(ginibre_radial):
    params = smp.ChainParams(n=8, beta=1.0, sweeps=300, burn_in=50, seed=1)
    serial = smp.run_chains(params, pot.ginibre(), ginibre_radial, 3, threads=1)
    threaded = smp.run_chains(params, pot.ginibre(), ginibre_radial, 3, threads=3)
    for a, b in zip(serial, threaded):
        assert np.array_equal(a.configs, b.configs)
    assert serial[0].metadata["spawn_key"] != serial[1].metadata["spawn_key"]


def test_energy_stabilizes(ginibre_radial):
    params = smp.ChainParams(n=32, beta=1.0, sweeps=20_000, burn_in=2000, seed=8)
    chains = smp.run_chains(params, pot.ginibre(), ginibre_radial, 2)
    e = [c.energy for c in chains]
    assert an.split_rhat(e) < 1.05
    first, second = e[0][:10_000], e[0][10_000:]
    se = math.hypot(an.blocked_standard_error(first), an.blocked_standard_error(second))
    assert abs(first.mean() - second.mean()) <= 4 * se
    assert 0.1 <= chains[0].metadata["acceptance_rate"] <= 0.7


def test_dn_recorded(ginibre_radial):
    params = smp.ChainParams(n=16, beta=1.0, sweeps=200, burn_in=50, seed=2, thin=4)
    b = smp.run_chain(params, pot.ginibre(), ginibre_radial)
    assert b.n_samples == 50
    np.testing.assert_allclose(b.dn, np.maximum(np.abs(b.configs).max(axis=1) - 1.0, 0.0), atol=1e-12)


def test_initial_configuration_follows_sigma(ginibre_radial, rng):
    z = smp.initial_configuration(20_000, ginibre_radial, rng)
    r2 = np.abs(z) ** 2
    # uniform on the unit disc: |z|^2 ~ U(0, 1)
    assert abs(r2.mean() - 0.5) < 0.01
    assert r2.max() <= 1.0


def test_invalid_configuration(ginibre):
    with pytest.raises(smp.SamplerError):
        smp.ChainState(np.array([np.nan, 0]), ginibre, 1.0, np.random.default_rng())
    with pytest.raises(smp.SamplerError):
        smp.ChainState(np.array([0.2, 0.2]), ginibre, 1.0, np.random.default_rng())
    with pytest.raises(smp.SamplerError):
        smp.ChainState(np.array([5.0, 0]), ginibre, 1.0, np.random.default_rng(), box=(-1, 1, -1, 1))


def test_regime_ratio():
    assert smp.regime_ratio(64, 1.0) == pytest.approx(64 / math.log(64))
    assert smp.regime_ratio(1, 1.0) == math.inf


# ---------------------------------------------------------------- Lagrange


def test_lagrange_interpolation(ginibre, rng):
    z = rng.normal(size=5) + 1j * rng.normal(size=5)
    for j in range(5):
        vals = smp.eval_lagrange(z, j, z, ginibre, 1.7)
        expect = np.zeros(5)
        expect[j] = 1.0
        np.testing.assert_allclose(vals, expect, atol=1e-300)
        assert vals[j] == 1.0


def test_lagrange_hand_value(ginibre):
    v = smp.eval_lagrange(np.array([0, 1 + 0j]), 0, np.array([2 + 0j]), ginibre, 1.0)
    assert v[0] == pytest.approx(math.exp(-8), rel=1e-12)


def test_lagrange_functional_zero_area(ginibre):
    assert smp.lagrange_functional([0, 1], 0, smp.Disc(0.3, 0.0), ginibre, 1.0) == 0.0


def test_lagrange_functional_brute_force(ginibre):
    z = np.array([0, 1 + 0j])
    val = smp.lagrange_functional(z, 0, smp.Disc(0j, 0.1), ginibre, 1.0, rtol=1e-10)
    # dense midpoint Riemann sum on a fine lattice, dA = dx dy / pi
    m = 2001
    x = (np.arange(m) + 0.5) / m * 0.2 - 0.1
    zz = (x[:, None] + 1j * x[None, :]).ravel()
    inside = np.abs(zz) < 0.1
    f = smp.eval_lagrange(z, 0, zz[inside], ginibre, 1.0)
    brute = f.sum() * (0.2 / m) ** 2 / math.pi
    assert val == pytest.approx(brute, abs=1e-4)
    assert val == pytest.approx(brute, rel=1e-4)


def test_lagrange_functional_exhaustion(ginibre):
    z = np.array([0.2, -0.5 + 0.1j, 0.4j])
    vals = [smp.lagrange_functional(z, 1, smp.Disc(-0.5 + 0.1j, r), ginibre, 1.0, nodes=48,
                                    rtol=1e-11)
            for r in (0.5, 1.5, 4.0, 6.0)]
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[-1] == pytest.approx(vals[-2], rel=1e-8)


def test_batch_functional_matches_single(ginibre, rng):
    configs = rng.normal(size=(5, 4)) * 0.5 + 1j * rng.normal(size=(5, 4)) * 0.5
    w = smp.Disc(0.2 + 0.1j, 0.4)
    batch = smp.lagrange_functional_batch(configs, 2, w, ginibre, 1.5, nodes=64)
    single = [smp.lagrange_functional(c, 2, w, ginibre, 1.5, nodes=64, rtol=1e-9) for c in configs]
    np.testing.assert_allclose(batch, single, rtol=1e-6)


def test_pair_functional_forms(ginibre, rng):
    configs = rng.normal(size=(3, 3)) * 0.5 + 1j * rng.normal(size=(3, 3)) * 0.5
    w1, w2 = smp.Disc(0.3j, 0.3), smp.Disc(-0.3j, 0.3)
    plain = smp.lagrange_pair_functional_batch(configs, 0, 1, w1, w2, ginibre, 1.0, sequential=False)
    y0 = smp.lagrange_functional_batch(configs, 0, w1, ginibre, 1.0, 16)
    y1 = smp.lagrange_functional_batch(configs, 1, w2, ginibre, 1.0, 16)
    np.testing.assert_allclose(plain, y0 * y1, rtol=1e-12)
    seq = smp.lagrange_pair_functional_batch(configs, 0, 1, w1, w2, ginibre, 1.0, nodes=24)
    # brute force: move z_0 to each node, then integrate l_1 of the moved configuration
    pj, wj = w1.nodes(24)
    for s, c in enumerate(configs):
        total = 0.0
        l0 = smp.eval_lagrange(c, 0, pj, ginibre, 1.0)
        for zeta, wt, a in zip(pj, wj, l0):
            moved = c.copy()
            moved[0] = zeta
            total += wt * a * smp.lagrange_functional_batch(moved[None], 1, w2, ginibre, 1.0, 24)[0]
        assert seq[s] == pytest.approx(total, rel=1e-10)


def test_rect_region():
    r = smp.Rect(0, 1, 0, 2)
    pts, w = r.nodes(8)
    assert w.sum() == pytest.approx(r.area, rel=1e-14)
    assert r.contains(np.array([0.5 + 1j]))[0] and not r.contains(np.array([1.5 + 1j]))[0]
    d = smp.Disc(1j, 0.5)
    assert d.nodes(8)[1].sum() == pytest.approx(d.area, rel=1e-14)
