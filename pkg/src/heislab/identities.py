"""Randomized verification suites for the metric and algebraic identities.

Each check draws seeded random inputs, evaluates the worst violation, and
compares it against the stated tolerance.  The suites back the CLI's
verify-identities subcommand and the acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    chart_embed,
    dilate,
    group_mul,
    horizontal_projection,
    koranyi_dist,
    proj_line,
    proj_perp,
    projected_distance,
    rotate,
    second_component,
    unit_vector,
    vertical_chart,
    vertical_projection,
    wedge,
)
from .incidence import GAP_BOUND_CONSTANT

__all__ = ["IdentityCheck", "metric_suite", "identity_suite"]


@dataclass
class IdentityCheck:
    name: str
    trials: int
    observed: float
    tolerance: float
    passed: bool

    @classmethod
    def from_values(cls, name, trials, observed, tolerance):
        return cls(name, int(trials), float(observed), float(tolerance), bool(observed <= tolerance))


def metric_suite(trials: int = 100_000, seed: int = 0) -> list[IdentityCheck]:
    """Triangle inequality, left invariance, dilation and rotation symmetry."""
    rng = np.random.default_rng(int(seed))
    n = int(trials)
    checks = []

    u, v, w = rng.uniform(-10, 10, (3, n, 3))
    lhs = koranyi_dist(u, w)
    rhs = koranyi_dist(u, v) + koranyi_dist(v, w)
    scale = np.maximum(lhs, 1.0)
    checks.append(
        IdentityCheck.from_values("triangle_inequality", n, np.max((lhs - rhs) / (1e-12 * scale)), 1.0)
    )

    m = max(n // 10, 1)
    g, a, b = rng.uniform(-5, 5, (3, m, 3))
    base = koranyi_dist(a, b)
    moved = koranyi_dist(group_mul(g, a), group_mul(g, b))
    viol = np.abs(moved - base) / (1e-9 * base + 1e-12)
    checks.append(IdentityCheck.from_values("left_invariance", m, viol.max(), 1.0))

    r = np.exp(rng.uniform(np.log(0.1), np.log(10.0)))
    lhs = koranyi_dist(dilate(r, a), dilate(r, b))
    rhs = r * base
    viol = np.abs(lhs - rhs) / (1e-9 * rhs + 1e-15)
    checks.append(IdentityCheck.from_values("dilation_homogeneity", m, viol.max(), 1.0))

    phi = rng.uniform(0, 2 * np.pi)
    lhs = koranyi_dist(rotate(phi, a), rotate(phi, b))
    viol = np.abs(lhs - base) / (1e-9 * base + 1e-15)
    checks.append(IdentityCheck.from_values("rotation_equivariance", m, viol.max(), 1.0))

    # local Hoelder comparison on the Euclidean unit ball: both ratio bounds
    # stay within a finite empirical constant (recorded, asserted < 1e3)
    p = rng.normal(size=(n, 3))
    p *= (rng.random(n) ** (1 / 3) / np.linalg.norm(p, axis=1))[:, None]
    q = rng.normal(size=(n, 3))
    q *= (rng.random(n) ** (1 / 3) / np.linalg.norm(q, axis=1))[:, None]
    eu = np.linalg.norm(p - q, axis=1)
    keep = eu > 1e-12
    dh = koranyi_dist(p[keep], q[keep])
    c_emp = max(float((dh / np.sqrt(eu[keep])).max()), float((eu[keep] / dh).max()))
    checks.append(IdentityCheck.from_values("hoelder_constant", n, c_emp, 1e3))
    return checks


def identity_suite(trials: int = 100_000, seed: int = 1) -> list[IdentityCheck]:
    """Wedge/projection identities, decomposition, oscillation, rigidity."""
    rng = np.random.default_rng(int(seed))
    n = int(trials)
    checks = []

    z, zeta = rng.uniform(-1, 1, (2, n, 2))
    th = rng.uniform(0, np.pi, n)
    lhs = wedge(z, zeta)
    rhs = wedge(proj_line(th, z), proj_perp(th, zeta)) - wedge(proj_line(th, zeta), proj_perp(th, z))
    checks.append(IdentityCheck.from_values("wedge_split", n, np.abs(lhs - rhs).max(), 1e-10))
    lhs2 = wedge(proj_perp(th, z), proj_line(th, zeta))
    rhs2 = wedge(z, proj_line(th, zeta))
    checks.append(IdentityCheck.from_values("wedge_absorb", n, np.abs(lhs2 - rhs2).max(), 1e-10))

    v = rng.uniform(-1, 1, (n, 3))
    rebuilt = group_mul(vertical_projection(th, v), horizontal_projection(th, v))
    checks.append(
        IdentityCheck.from_values("group_decomposition", n, np.abs(rebuilt - v).max(), 1e-12)
    )

    # oscillation identity |F'/2|^2 + |F''/4|^2 = 1 over frames x angles
    frames = max(n // 10, 1)
    angles = 1000
    ap = rng.uniform(0, 2 * np.pi, frames)
    aq = rng.uniform(0, 2 * np.pi, frames)
    tg = rng.uniform(0, np.pi, angles)
    e = np.stack([np.cos(tg), np.sin(tg)], axis=-1)
    ie = np.stack([-np.sin(tg), np.cos(tg)], axis=-1)
    pvec = np.stack([np.cos(ap), np.sin(ap)], axis=-1)
    qvec = np.stack([np.cos(aq), np.sin(aq)], axis=-1)
    qe = qvec @ e.T
    qie = qvec @ ie.T
    pwe = pvec[:, 0, None] * e[None, :, 1] - pvec[:, 1, None] * e[None, :, 0]
    pwie = pvec[:, 0, None] * ie[None, :, 1] - pvec[:, 1, None] * ie[None, :, 0]
    F1 = 2.0 * (qie * pwe + qe * pwie)
    F2 = 4.0 * (qie * pwie - qe * pwe)
    resid = np.abs((F1 / 2) ** 2 + (F2 / 4) ** 2 - 1.0)
    checks.append(IdentityCheck.from_values("oscillation", frames * angles, resid.max(), 1e-9))

    # F' is 4-Lipschitz in the angle
    m = max(n // 10, 1)
    th1 = rng.uniform(0, np.pi, m)
    th2 = rng.uniform(0, np.pi, m)
    fa = rng.integers(0, frames, m)
    qe1 = qvec[fa, 0] * np.cos(th1) + qvec[fa, 1] * np.sin(th1)
    qie1 = -qvec[fa, 0] * np.sin(th1) + qvec[fa, 1] * np.cos(th1)
    pwe1 = pvec[fa, 0] * np.sin(th1) - pvec[fa, 1] * np.cos(th1)
    pwie1 = pvec[fa, 0] * np.cos(th1) + pvec[fa, 1] * np.sin(th1)
    qe2 = qvec[fa, 0] * np.cos(th2) + qvec[fa, 1] * np.sin(th2)
    qie2 = -qvec[fa, 0] * np.sin(th2) + qvec[fa, 1] * np.cos(th2)
    pwe2 = pvec[fa, 0] * np.sin(th2) - pvec[fa, 1] * np.cos(th2)
    pwie2 = pvec[fa, 0] * np.cos(th2) + pvec[fa, 1] * np.sin(th2)
    f1a = 2.0 * (qie1 * pwe1 + qe1 * pwie1)
    f1b = 2.0 * (qie2 * pwe2 + qe2 * pwie2)
    lip = np.abs(f1a - f1b) - 4.0 * np.abs(th1 - th2)
    checks.append(IdentityCheck.from_values("lipschitz_F_prime", m, lip.max(), 1e-9))

    # |det DG| identity against the direct 3x3 determinant
    v1, v2, v3 = rng.uniform(-5, 5, (3, n, 3))
    from .incidence import solve_triples

    _, _, dets = solve_triples(v1, v2, v3)
    rows = np.stack(
        [np.stack([-2 * vv[:, 1], 2 * vv[:, 0], np.ones(n)], axis=-1) for vv in (v1, v2, v3)],
        axis=1,
    )
    direct = np.abs(np.linalg.det(rows))
    scale3 = np.maximum(np.abs(np.stack([v1, v2, v3]))[:, :, :2].max(axis=(0, 2)), 1.0) ** 3
    checks.append(
        IdentityCheck.from_values("det_identity", n, (np.abs(direct - dets) / (1e-9 * scale3)).max(), 1.0)
    )

    # projections within delta force the second component below 64 delta
    delta = 0.05
    cv = rng.uniform(-2, 2, (m, 3))
    thg = rng.uniform(0, np.pi, m)
    chart0 = vertical_chart(thg, vertical_projection(thg, cv))
    eps = rng.uniform(-1, 1, (m, 2))
    eps *= 0.5 * delta / np.maximum(np.hypot(eps[:, 0], eps[:, 1]), 1e-12)[:, None]
    target = chart0 + np.stack([eps[:, 0], eps[:, 1] * delta], axis=-1)
    lam = rng.uniform(-3, 3, m)
    horiz = np.zeros((m, 3))
    horiz[:, :2] = lam[:, None] * unit_vector(thg)
    cw = group_mul(chart_embed(thg, target), horiz)
    close = projected_distance(thg, cv, cw) <= delta
    gap = np.abs(second_component(cv, cw))
    worst = (gap[close] / (GAP_BOUND_CONSTANT * delta)).max() if np.any(close) else 0.0
    checks.append(IdentityCheck.from_values("second_component_gap", int(close.sum()), worst, 1.0))
    return checks
