"""Koranyi-ball covers of Euclidean balls: coverage and 1/r scaling."""

import numpy as np
import pytest

from heislab.core import koranyi_dist
from heislab.covering import (
    CoverageError,
    CoverResult,
    cover_euclidean_ball,
    cover_scaling,
    verify_cover,
)


def test_cover_validation():
    with pytest.raises(ValueError):
        cover_euclidean_ball(np.zeros(3), 1.5)
    with pytest.raises(ValueError):
        cover_euclidean_ball(np.array([2.0, 0, 0]), 0.5)


def test_cover_counts_bounded_at_unit_scale():
    cover = cover_euclidean_ball(np.zeros(3), 0.9)
    assert cover.count < 600
    worst = verify_cover(cover, n_samples=20_000, seed=1)
    assert worst <= 0.9


def test_cover_construction_margin():
    # the lattice guarantees every sample within 0.53 r of a center
    v = np.array([0.3, -0.4, 0.2])
    for r in (0.5, 0.125):
        cover = cover_euclidean_ball(v, r)
        worst = verify_cover(cover, n_samples=30_000, seed=3)
        assert worst <= 0.55 * r


def test_cover_verify_detects_gaps():
    cover = cover_euclidean_ball(np.zeros(3), 0.25)
    # drop most centers: coverage must fail
    broken = CoverResult(
        center=cover.center,
        radius=cover.radius,
        centers=cover.centers[:2],
        planar_spacing=cover.planar_spacing,
        vertical_spacing=cover.vertical_spacing,
        column_offsets=cover.column_offsets[:1],
        column_kmin=cover.column_kmin[:1],
        column_base=np.array([0]),
    )
    with pytest.raises(CoverageError):
        verify_cover(broken, n_samples=5000, seed=0)


def test_cover_scaling_slope_and_constant():
    radii = [2.0**-k for k in range(2, 8)]
    rep = cover_scaling(np.zeros(3), radii, n_samples=10_000, seed=2)
    assert abs(rep.slope.slope - 1.0) <= 0.15
    # a single empirical constant bounds the whole sweep
    assert np.all(rep.counts <= np.ceil(rep.n_empirical / rep.radii))
    assert rep.worst_distance <= max(radii)
    assert "ceil" in rep.table()


def test_cover_centers_contain_sheared_ladder():
    # every sample of the ball is within the radius of its witness center
    v = np.array([0.9, 0.0, 0.0])  # |v| = 0.9, twist is significant
    r = 0.125
    cover = cover_euclidean_ball(v, r)
    rng = np.random.default_rng(7)
    dirs = rng.normal(size=(2000, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    samples = v + dirs * (r * rng.random(2000) ** (1 / 3))[:, None]
    d = np.array([koranyi_dist(cover.centers, s).min() for s in samples])
    assert d.max() <= 0.55 * r
