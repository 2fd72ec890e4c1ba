"""Box-counting and correlation estimators against analytic oracles."""

import numpy as np
import pytest

from heislab.core import dilate
from heislab.dimension import (
    box_count,
    box_dimension,
    chart_box_count,
    chart_box_dimension,
    correlation_dimension,
    default_scales,
)
from heislab.estimates import fit_loglog
from heislab.measures import WeightedCloud, default_ifs, ifs_generate, sample_cube, sample_horizontal_line


def dense_cube(m_planar=16, m_vert=128):
    """Grid cloud hitting every anisotropic cell down to delta=1/m_planar."""
    x = (np.arange(m_planar) + 0.5) / m_planar
    t = (np.arange(m_vert) + 0.5) / m_vert
    X, Y, T = np.meshgrid(x, x, t, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), T.ravel()])
    return WeightedCloud(pts, np.full(len(pts), 1.0 / len(pts)))


def expected_occupancy(delta, n):
    """Poisson-corrected expected occupied cells for n uniform points in
    the unit cube on an origin-anchored anisotropic grid."""
    cells = int(np.ceil(1 / delta)) ** 2 * int(np.ceil(1 / delta**2))
    return cells * (1.0 - (1.0 - 1.0 / cells) ** n)


def test_box_count_single_point():
    cloud = WeightedCloud(np.array([[0.3, 0.4, 0.5]]), np.array([1.0]))
    for d in (0.5, 0.1, 0.013):
        assert box_count(cloud, d) == 1


def test_box_count_dense_cube_analytic():
    cloud = dense_cube()
    for delta in (0.5, 0.25, 0.125):
        expected = int(np.ceil(1 / delta)) ** 2 * int(np.ceil(1 / delta**2))
        assert box_count(cloud, delta) == expected


def test_box_count_lattice_translation_invariance():
    cloud = sample_cube(2000, 3)
    delta = 0.125
    shift = np.array([4 * delta, 2 * delta, 3 * delta**2])
    moved = WeightedCloud(cloud.points + shift, cloud.weights)
    assert box_count(cloud, delta) == box_count(moved, delta)


def test_box_count_refinement_monotone():
    cloud = sample_cube(5000, 8)
    for delta in (0.5, 0.25, 0.125, 0.0625):
        assert box_count(cloud, 2 * delta) <= box_count(cloud, delta)


def test_box_count_dilation_exact():
    cloud = sample_cube(3000, 5)
    for r in (2.0, 0.5):
        scaled = dilate(r, cloud.points)
        for delta in (0.25, 0.125):
            assert box_count(scaled, r * delta) == box_count(cloud, delta)


def test_box_dimension_validations():
    cloud = sample_cube(500, 2)
    with pytest.raises(ValueError):
        box_dimension(cloud, [0.5, 0.25, 0.125])  # too few
    with pytest.raises(ValueError):
        box_dimension(cloud, [0.5, 0.25, 0.2, 0.1])  # not geometric


def test_box_dimension_cube_at_workable_scales():
    # with 1e5 points the window 2^-1..2^-4 stays clear of occupancy
    # saturation; the Poisson oracle predicts slope just under 4
    n = 100_000
    cloud = sample_cube(n, 17)
    scales = [2.0**-k for k in range(1, 5)]
    oracle = fit_loglog(scales, [expected_occupancy(d, n) for d in scales], x_transform=lambda s: 1 / s)
    est = box_dimension(cloud, scales)
    assert abs(est.slope - oracle.slope) < 0.1
    assert abs(est.slope - 4.0) <= 0.3
    assert est.r_squared > 0.98


def test_box_dimension_cube_saturated_window_matches_oracle():
    # at the finer window 2^-2..2^-5 the 1e5-point cloud saturates: the
    # exact occupancy oracle puts the slope near 2.9, far below the solid
    # cube value 4; the estimator must agree with the oracle
    n = 100_000
    cloud = sample_cube(n, 23)
    scales = [2.0**-k for k in range(2, 6)]
    oracle = fit_loglog(scales, [expected_occupancy(d, n) for d in scales], x_transform=lambda s: 1 / s)
    est = box_dimension(cloud, scales)
    assert abs(est.slope - oracle.slope) < 0.1
    assert oracle.slope < 3.1  # the window is genuinely saturated


def test_box_dimension_line():
    cloud = sample_horizontal_line(0.9, 10_000, 4)
    est = box_dimension(cloud, [2.0**-k for k in range(1, 5)])
    assert abs(est.slope - 1.0) <= 0.2


def test_box_dimension_permutation_and_weights_invariance():
    cloud = sample_cube(4000, 9)
    perm = np.random.default_rng(0).permutation(len(cloud))
    shuffled = WeightedCloud(cloud.points[perm], cloud.weights[perm] * 7.5)
    scales = [2.0**-k for k in range(1, 5)]
    assert box_dimension(cloud, scales).slope == box_dimension(shuffled, scales).slope


def test_chart_box_dimension_full_square():
    m1, m2 = 32, 1024
    a = (np.arange(m1) + 0.5) / m1
    b = (np.arange(m2) + 0.5) / m2
    A, B = np.meshgrid(a, b, indexing="ij")
    pts = np.column_stack([A.ravel(), B.ravel()])
    for delta in (0.5, 0.25, 0.125):
        assert chart_box_count(pts, delta) == int(np.ceil(1 / delta)) * int(np.ceil(1 / delta**2))
    est = chart_box_dimension(pts, [2.0**-k for k in range(1, 5)])
    assert abs(est.slope - 3.0) <= 0.2


def test_chart_box_dimension_degenerate_and_segment():
    single = np.array([[0.3, 0.8]])
    est = chart_box_dimension(single, [2.0**-k for k in range(1, 5)])
    assert est.degenerate and est.slope == 0.0
    seg = np.column_stack([np.linspace(0, 1, 4000), np.full(4000, 0.37)])
    est2 = chart_box_dimension(seg, [2.0**-k for k in range(1, 5)])
    assert abs(est2.slope - 1.0) <= 0.2


def test_correlation_two_point_degenerate():
    cloud = WeightedCloud(np.array([[0, 0, 0], [1, 0, 0]], dtype=float), np.array([0.5, 0.5]))
    est = correlation_dimension(cloud, [0.25, 0.5, 1.0, 2.0])
    assert est.degenerate


def test_correlation_dimension_cube():
    cloud = sample_cube(12_000, 31)
    est = correlation_dimension(cloud, [2.0**-k for k in range(2, 6)])
    assert abs(est.slope - 4.0) <= 0.4


def test_correlation_dimension_ifs():
    # depth-6 attractor subsampled: resolution 0.034 keeps the window honest
    full = ifs_generate(default_ifs(8, 0.5, depth=6), seed=6, max_points=2**18)
    sub = np.sort(np.random.default_rng(5).choice(len(full), 25_000, replace=False))
    cloud = WeightedCloud(full.points[sub], np.full(sub.size, 1.0 / sub.size))
    est = correlation_dimension(cloud, [0.3, 0.15, 0.075, 0.0375])
    assert abs(est.slope - 3.0) <= 0.4


def test_box_dimension_ifs():
    cloud = ifs_generate(default_ifs(8, 0.5, depth=6), seed=6, max_points=2**18)
    est = box_dimension(cloud, [1.0, 0.5, 0.25, 0.125])
    assert abs(est.slope - 3.0) <= 0.3


def test_correlation_matches_bruteforce_on_small_cloud():
    # hash path and all-pairs path agree
    cloud = sample_cube(2500, 12)
    scales = [0.05, 0.1, 0.2, 0.4]
    est_hash = correlation_dimension(cloud, scales)
    sub = WeightedCloud(cloud.points[:1999], cloud.weights[:1999])
    est_small = correlation_dimension(sub, scales)
    assert abs(est_hash.slope - est_small.slope) < 0.25


def test_default_scales_geometry():
    cloud = sample_cube(20_000, 44)
    scales = default_scales(cloud)
    assert scales[0] == 0.25
    assert np.allclose(scales[:-1] / scales[1:], 2.0)
    assert scales[-1] >= max(2.0**-8, 4 * cloud.resolution())
