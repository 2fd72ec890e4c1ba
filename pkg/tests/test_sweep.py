"""Bound curves, pushforward masses, and the angle-sweep experiment."""

import numpy as np
import pytest

from heislab.core import koranyi_dist, vertical_projection
from heislab.measures import WeightedCloud, sample_cube, sample_vertical_plane
from heislab.sweep import (
    ZDeltaReport,
    alpha_exponent,
    bound_bdfm,
    bound_fh,
    bound_theorem,
    eta_choice,
    improvement_interval,
    kappa,
    pushforward_ball_mass,
    sweep_dimension,
    z_delta_fraction,
)


def test_bound_theorem_values():
    # both pieces meet at s=5/2 with value 5/4
    assert bound_theorem(2.5) == pytest.approx(1.25, abs=1e-12)
    assert bound_theorem(2.5 - 1e-9) == pytest.approx(1.25, abs=1e-8)
    assert bound_theorem(4.0) == pytest.approx(8 / 5, abs=1e-12)
    assert bound_theorem(3.0) == pytest.approx(15 / 11, abs=1e-12)
    with pytest.raises(ValueError):
        bound_theorem(2.0)
    with pytest.raises(ValueError):
        bound_theorem(4.5)


def test_bound_bdfm_values():
    assert bound_bdfm(0.5) == 0.5
    assert bound_bdfm(2.0) == 1.0
    assert bound_bdfm(4.0) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        bound_bdfm(4.2)


def test_bound_fh_values():
    assert bound_fh(2.0) == pytest.approx(1.0)
    assert bound_fh(3.0) == pytest.approx(1.0 + 2.0 / 288.0, abs=1e-12)
    assert bound_fh(4.0) == pytest.approx(1.0 + 6.0 / 512.0, abs=1e-12)
    with pytest.raises(ValueError):
        bound_fh(1.5)


def test_kappa_branches():
    assert kappa(2.5) == pytest.approx(1.25, abs=1e-12)
    # s=4: branches 2 and 36/15=2.4
    assert kappa(4.0) == pytest.approx(2.4, abs=1e-12)
    # below the crossover the s/2 branch dominates
    assert kappa(2.2) == pytest.approx(1.1, abs=1e-12)


def test_bound_equals_s_minus_kappa():
    s = np.linspace(2.0 + 1e-9, 4.0, 1000)
    assert np.max(np.abs(bound_theorem(s) - (s - kappa(s)))) < 1e-12


def test_eta_and_alpha():
    with pytest.raises(ValueError):
        eta_choice(3.0, kappa(3.0))  # margin zero: flagged
    k = kappa(3.0) + 1e-3
    eta = eta_choice(3.0, k)
    assert eta == pytest.approx(1e-7, rel=1e-9)
    a = alpha_exponent(3.0, k, eta)
    assert 0 < a < 1
    assert a == pytest.approx((3.0 - k + 1000 * eta) / 3.0, abs=1e-15)
    with pytest.raises(ValueError):
        alpha_exponent(3.0, 3.5, eta)


def test_improvement_interval():
    lo, hi = improvement_interval()
    assert lo == 2.0
    # root of 7s^2 - 24s + 5 via the quadratic formula
    assert hi == pytest.approx((12 + np.sqrt(109)) / 7, abs=1e-15)
    assert hi == pytest.approx(3.2057581, abs=1e-7)
    # right endpoint solves bound_theorem(s) = 2s-5
    assert bound_theorem(hi) == pytest.approx(2 * hi - 5, abs=1e-12)
    # strict improvement inside, reversed or equal outside
    s = np.linspace(2.0 + 1e-6, 4.0, 1000)
    better = bound_theorem(s) > np.maximum(bound_bdfm(s), bound_fh(s))
    assert np.array_equal(better, s < hi)
    assert bound_theorem(3.0) > max(bound_bdfm(3.0), bound_fh(3.0))
    assert bound_theorem(3.5) < bound_bdfm(3.5)


def test_pushforward_ball_mass_basics():
    cloud = sample_cube(500, 3)
    y = cloud.points[7]
    proj = vertical_projection(0.4, cloud.points)
    diam = float(koranyi_dist(proj[:, None, :], proj[None, :, :]).max())
    assert pushforward_ball_mass(cloud, 0.4, y, diam + 1e-9) == pytest.approx(1.0, abs=1e-12)
    atom = WeightedCloud(y[None, :], np.array([0.7]))
    for d in (1e-6, 0.3, 10.0):
        assert pushforward_ball_mass(atom, 1.1, y, d) == pytest.approx(0.7)


def test_pushforward_two_point_separation():
    # projections at distance ~1 at theta=0: only the center's own weight counts
    a = np.array([0.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])  # on the vertical plane at theta=0 already
    cloud = WeightedCloud(np.stack([a, b]), np.array([0.25, 0.75]))
    m = pushforward_ball_mass(cloud, 0.0, a, 0.5)
    assert m == pytest.approx(0.25)


def test_pushforward_monotone_in_delta_and_order_invariant():
    cloud = sample_cube(2000, 9)
    y = cloud.points[11]
    masses = [pushforward_ball_mass(cloud, 1.0, y, d) for d in (0.05, 0.1, 0.2, 0.4)]
    assert all(m1 <= m2 for m1, m2 in zip(masses, masses[1:]))
    perm = np.random.default_rng(1).permutation(len(cloud))
    shuffled = WeightedCloud(cloud.points[perm], cloud.weights[perm])
    assert pushforward_ball_mass(shuffled, 1.0, y, 0.2) == pytest.approx(masses[2], abs=1e-12)


def brute_z_delta(cloud, delta, s, eta, theta_grid, centers_idx):
    thetas = np.arange(theta_grid) * np.pi / theta_grid
    frac = np.empty(centers_idx.size)
    for k, ci in enumerate(centers_idx):
        heavy = 0
        for th in thetas:
            m = pushforward_ball_mass(cloud, th, cloud.points[ci], delta)
            heavy += m >= delta**s
        frac[k] = heavy / theta_grid
    return frac, float((frac >= delta**eta).mean())


def test_z_delta_matches_bruteforce():
    cloud = sample_cube(400, 5)
    rep = z_delta_fraction(cloud, 0.1, 2.5, 1e-4, theta_grid=64, sample_points=24, seed=8)
    centers = np.random.default_rng(8).choice(400, size=24, p=cloud.weights / cloud.total_mass)
    frac, bad = brute_z_delta(cloud, 0.1, 2.5, 1e-4, 64, centers)
    assert np.allclose(rep.bad_theta_fraction, frac, atol=1e-12)
    assert rep.bad_point_mass == pytest.approx(bad, abs=1e-12)


def test_z_delta_trivial_thresholds():
    cloud = sample_cube(2000, 6)
    # s far above the cloud dimension: threshold tiny, every ball is heavy
    rep = z_delta_fraction(cloud, 2.0**-6, 40.0, 1e-4, sample_points=64, seed=2)
    assert rep.bad_point_mass == pytest.approx(1.0)
    # s = 0: threshold 1, only full-mass balls qualify; scattered cloud has none
    rep0 = z_delta_fraction(cloud, 2.0**-6, 0.0, 1e-4, sample_points=64, seed=2)
    assert rep0.bad_point_mass == 0.0
    assert np.all(rep0.bad_theta_fraction == 0.0)


def test_z_delta_grid_doubling_stability():
    # doubling the grid moves each fraction by at most one fine-grid cell per
    # heavy/light transition of that point's angle profile
    cloud = sample_cube(1500, 13)
    delta, s, eta = 2.0**-4, 2.8, 1e-4
    a = z_delta_fraction(cloud, delta, s, eta, theta_grid=64, sample_points=12, seed=3)
    b = z_delta_fraction(cloud, delta, s, eta, theta_grid=128, sample_points=12, seed=3)
    centers = np.random.default_rng(3).choice(
        len(cloud), size=12, p=cloud.weights / cloud.total_mass
    )
    fine = np.arange(128) * np.pi / 128
    for i, ci in enumerate(centers):
        heavy = np.array(
            [pushforward_ball_mass(cloud, th, cloud.points[ci], delta) >= delta**s for th in fine]
        )
        transitions = int(np.sum(heavy != np.roll(heavy, 1)))
        bound = (transitions + 1) / 128
        assert abs(a.bad_theta_fraction[i] - b.bad_theta_fraction[i]) <= bound + 1e-12
        # shared angles decide identically: the coarse grid is half the fine one
        assert b.bad_theta_fraction[i] == pytest.approx(
            (a.bad_theta_fraction[i] + heavy[1::2].mean()) / 2, abs=1e-12
        )


def test_z_delta_validation():
    cloud = sample_cube(100, 1)
    with pytest.raises(ValueError):
        z_delta_fraction(cloud, 0.1, 2.5, 1e-4, theta_grid=32)
    with pytest.raises(ValueError):
        z_delta_fraction(cloud, -0.1, 2.5, 1e-4)


def test_sweep_plane_fixed_point():
    # projecting the vertical plane at its own angle is the identity
    plane = sample_vertical_plane(0.0, 30_000, 3)
    res = sweep_dimension(plane, 16, [2.0**-k for k in range(1, 5)])
    assert abs(res.estimates[0].slope - 3.0) <= 0.3
    assert res.nominal_dimension == 3.0
    assert res.bound_theorem == pytest.approx(15 / 11)


def test_sweep_single_point():
    cloud = WeightedCloud(np.array([[0.2, 0.3, 0.1]]), np.array([1.0]))
    res = sweep_dimension(cloud, 16, [2.0**-k for k in range(1, 5)])
    assert np.all(res.slopes == 0.0)
    assert all(e.degenerate for e in res.estimates)


def test_sweep_validation():
    cloud = sample_cube(100, 1)
    with pytest.raises(ValueError):
        sweep_dimension(cloud, 8, [0.5, 0.25, 0.125, 0.0625])


def test_sweep_thread_determinism():
    cloud = sample_cube(5000, 21)
    scales = [2.0**-k for k in range(1, 5)]
    r1 = sweep_dimension(cloud, 16, scales, threads=1)
    r4 = sweep_dimension(cloud, 16, scales, threads=4)
    assert np.array_equal(r1.slopes, r4.slopes)
