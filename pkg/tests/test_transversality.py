"""Near-angle interval extraction and the oscillation identity."""

import numpy as np
import pytest

from heislab.core import koranyi_dist, projected_distance, wedge
from heislab.transversality import (
    AngleIntervalSet,
    TransversalityFrame,
    near_angle_set,
    transversality_F,
    transversality_frame,
    verify_transversality,
)


def tangency_pair(phi, d, rho, t=0.3):
    """Pair whose near-angle set is one arc of analytic width."""
    h = rho * d
    e = np.array([np.cos(phi), np.sin(phi)])
    ie = np.array([-np.sin(phi), np.cos(phi)])
    z = 0.5 * (d * e + h * ie)
    zeta = 0.5 * (-d * e + h * ie)
    tau = t - 2.0 * wedge(z, zeta)
    return np.r_[z, t], np.r_[zeta, tau]


def test_near_angle_set_whole_and_empty():
    v = np.array([0.3, -0.2, 0.1])
    w = np.array([0.5, 0.4, -0.3])
    grid = np.linspace(0, np.pi, 4096, endpoint=False)
    g = projected_distance(grid, v, w)
    s = near_angle_set(v, w, float(g.max()) * 1.01)
    assert s.whole and s.count == 1 and s.max_length == np.pi
    s2 = near_angle_set(v, w, float(g.min()) * 0.99)
    assert s2.is_empty and s2.count == 0


def test_near_angle_set_degenerate_pair():
    v = np.array([0.1, 0.2, 0.3])
    s = near_angle_set(v, v.copy(), 0.01)
    assert s.whole and s.degenerate


def test_near_angle_set_against_brute_scan():
    # projections of ((1,0),0) and the origin: handled by a million-point scan
    v = np.array([1.0, 0.0, 0.0])
    w = np.zeros(3)
    delta = 0.3
    s = near_angle_set(v, w, delta, refine_tol=1e-7)
    grid = np.linspace(0, np.pi, 1_000_000, endpoint=False)
    below = projected_distance(grid, v, w) <= delta
    # enclosure: every scanned sublevel angle lies in some arc
    inside = np.array([s.contains(th) for th in grid[below][::97]])
    assert inside.all()
    # measure agreement
    brute_measure = below.mean() * np.pi
    assert s.total_length == pytest.approx(brute_measure, abs=1e-4)


def test_near_angle_set_arc_wrapping():
    # tangency pair at phi near 0: the arc straddles the 0/pi seam
    v, w = tangency_pair(0.001, 1.0, 1.0)
    s = near_angle_set(v, w, 0.05)
    width = 2 * np.arcsin(0.05 / 5**0.25)
    assert s.count == 1
    assert s.max_length == pytest.approx(width, abs=1e-5)
    assert s.contains(0.0) and s.contains(0.001)
    assert s.contains(np.pi - 0.01)  # just below the seam, inside the arc
    assert not s.contains(0.5)


def test_near_angle_set_analytic_width():
    for phi, d, rho, delta in [(0.7, 1.0, 1.0, 1e-2), (2.1, 0.6, 1.7, 1e-3), (1.2, 1.8, 0.5, 1e-3)]:
        v, w = tangency_pair(phi, d, rho)
        assert koranyi_dist(v, w) == pytest.approx(d, rel=1e-12)
        s = near_angle_set(v, w, delta)
        width = 2 * np.arcsin(delta / (d**4 + 4 * d**2 * (rho * d) ** 2) ** 0.25)
        assert s.count == 1
        assert s.max_length == pytest.approx(width, abs=5e-6)
        # the arc sits at the planar-difference direction
        assert s.contains(phi, slack=1e-9)


def test_near_angle_set_rescan_stability():
    v, w = tangency_pair(0.9, 1.2, 1.1)
    tol = 1e-6
    a = near_angle_set(v, w, 1e-2, refine_tol=tol, samples=1 << 14)
    b = near_angle_set(v, w, 1e-2, refine_tol=tol, samples=10 * (1 << 14))
    assert a.count == b.count
    assert np.all(np.abs(a.arcs - b.arcs) < tol)


def test_frame_validation_and_values():
    v, w = tangency_pair(0.4, 1.0, 1.0)
    f = transversality_frame(v, w)
    assert f.a == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(f.p, [np.cos(0.4), np.sin(0.4)])
    assert np.allclose(f.q, [-np.sin(0.4), np.cos(0.4)])
    with pytest.raises(ValueError):
        transversality_frame(np.array([1.0, 0, 0]), np.array([1.0, 0, 1.0]))
    with pytest.raises(ValueError):
        TransversalityFrame(0.0, np.array([2.0, 0.0]), np.array([0.0, 1.0]))


def test_oscillation_identity_bulk():
    rng = np.random.default_rng(17)
    n_frames, n_angles = 10_000, 1_000
    ang_p = rng.uniform(0, 2 * np.pi, n_frames)
    ang_q = rng.uniform(0, 2 * np.pi, n_frames)
    a = rng.normal(size=n_frames)
    th = rng.uniform(0, np.pi, n_angles)
    e = np.stack([np.cos(th), np.sin(th)], axis=-1)
    ie = np.stack([-np.sin(th), np.cos(th)], axis=-1)
    p = np.stack([np.cos(ang_p), np.sin(ang_p)], axis=-1)
    q = np.stack([np.cos(ang_q), np.sin(ang_q)], axis=-1)
    qe = q @ e.T
    qie = q @ ie.T
    pwe = p[:, 0, None] * e[None, :, 1] - p[:, 1, None] * e[None, :, 0]
    pwie = p[:, 0, None] * ie[None, :, 1] - p[:, 1, None] * ie[None, :, 0]
    F1 = 2.0 * (qie * pwe + qe * pwie)
    F2 = 4.0 * (qie * pwie - qe * pwe)
    resid = np.abs((F1 / 2) ** 2 + (F2 / 4) ** 2 - 1.0)
    assert resid.max() < 1e-9
    # spot-check against the frame API
    f = TransversalityFrame(float(a[0]), p[0], q[0])
    F, F1s, F2s = transversality_F(f, th)
    assert np.allclose(F1s, F1[0], atol=1e-12)
    assert np.allclose(F2s, F2[0], atol=1e-12)


def test_F_derivatives_finite_difference():
    rng = np.random.default_rng(5)
    f = TransversalityFrame(0.37, np.array([np.cos(1.1), np.sin(1.1)]), np.array([np.cos(2.9), np.sin(2.9)]))
    th = rng.uniform(0, np.pi, 200)
    h = 1e-5
    Fp, F1p, _ = transversality_F(f, th + h)
    Fm, F1m, _ = transversality_F(f, th - h)
    F, F1, F2 = transversality_F(f, th)
    assert np.max(np.abs(F1 - (Fp - Fm) / (2 * h))) <= 1e-6
    assert np.max(np.abs(F2 - (F1p - F1m) / (2 * h))) <= 1e-6


def test_F_prime_lipschitz():
    rng = np.random.default_rng(9)
    for _ in range(50):
        ap, aq = rng.uniform(0, 2 * np.pi, 2)
        f = TransversalityFrame(
            rng.normal(), np.array([np.cos(ap), np.sin(ap)]), np.array([np.cos(aq), np.sin(aq)])
        )
        t1 = rng.uniform(0, np.pi, 100)
        t2 = rng.uniform(0, np.pi, 100)
        _, F1a, _ = transversality_F(f, t1)
        _, F1b, _ = transversality_F(f, t2)
        assert np.all(np.abs(F1a - F1b) <= 4.0 * np.abs(t1 - t2) + 1e-9)


def test_verify_transversality_small_run():
    rep = verify_transversality([1e-2, 1e-3, 1e-4], trials=60, seed=4)
    assert rep.counts_within_bound
    assert rep.max_interval_count <= 40
    assert np.isfinite(rep.c_empirical) and 0 < rep.c_empirical < 10
    assert abs(rep.slope.slope - 1.0) <= 0.1
    kinds = {r["kind"] for r in rep.rows}
    assert {"tangency", "generic", "vertical", "opposite"} <= kinds
    # whole-circle rows: the d <= delta case is accepted with length pi
    whole = [r for r in rep.rows if r["whole"]]
    assert whole and all(r["d"] <= r["delta"] for r in whole)
    assert "pair_id" in rep.table()
