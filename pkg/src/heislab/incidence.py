"""Quadruple incidence counting and three-point rigidity.

A quadruple (v, v1, v2, v3) is incident at scale delta when each v_j lies
in the Koranyi annulus A(v, t, 2t) and has its vertical projection within
2*delta of v's at some grid angle theta_j, the three witness angles are
pairwise separated mod pi by at least delta^(4 eta), and the planar part
of v2 keeps Euclidean distance delta^alpha from the line through the
planar parts of v1 and v3 whenever those are at least t/2 away from v's.

The normalized count (product-measure mass) of such quadruples is bounded
above by max{t^(2s) delta^(s/2), t^(1+s) delta^((1-alpha)(s-1)-1000 eta)}
for an s-dimensional measure, the second branch always dominating; the
sweep fits the count's delta-scaling and compares it with that exponent.

The rigidity making the count small: for fixed v1, v2, v3 with
non-collinear planar parts, the map G(z,t) = (t - tau_j - 2 z ^ zeta_j)_j
has |det DG| = 4 |z1^z2 + z2^z3 + z3^z1| > 0, so at most one point nearly
annihilates all three second components at once (triple_point_solve).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import koranyi_dist, projected_distance, second_component, wedge
from .estimates import DimensionEstimate, fit_loglog
from .measures import WeightedCloud
from .parallel import ordered_map
from .sweep import alpha_exponent, eta_choice, kappa

__all__ = [
    "second_component_gap",
    "GAP_BOUND_CONSTANT",
    "solve_triples",
    "triple_point_solve",
    "IncidenceConfig",
    "make_incidence_config",
    "IncidenceReport",
    "incidence_experiment",
    "IncidenceSweepReport",
    "incidence_sweep",
]

GAP_BOUND_CONSTANT = 64.0


def second_component_gap(v, w, theta, delta: float):
    """(|t - tau - 2 z^zeta|, implication holds) for the pair at theta.

    Projections within delta force the angle-independent second component
    below a fixed multiple of delta (constant 64, a deliberate
    over-estimate of the derivation's 16 plus cross terms); the boolean
    reports whether that implication holds for this input.
    """
    gap = np.abs(second_component(v, w))
    far = projected_distance(theta, v, w) > delta
    holds = far | (gap <= GAP_BOUND_CONSTANT * delta)
    return gap, holds


def _det3(c1, c2, c3):
    return (
        c1[..., 0] * (c2[..., 1] * c3[..., 2] - c2[..., 2] * c3[..., 1])
        - c2[..., 0] * (c1[..., 1] * c3[..., 2] - c1[..., 2] * c3[..., 1])
        + c3[..., 0] * (c1[..., 1] * c2[..., 2] - c1[..., 2] * c2[..., 1])
    )


def solve_triples(v1, v2, v3, det_tol_factor: float = 1e-10):
    """Solve t - tau_j - 2 z^zeta_j = 0 for (z, t), batched.

    Returns (solutions, degenerate, dets): rows of the linear system are
    (-2 y_j, 2 x_j, 1); |det| = 4 |z1^z2 + z2^z3 + z3^z1|.  Triples whose
    planar parts are collinear (|det| below det_tol_factor times the cube
    of the coordinate scale) are flagged degenerate with NaN solutions.
    """
    v1 = np.atleast_2d(np.asarray(v1, dtype=float))
    v2 = np.atleast_2d(np.asarray(v2, dtype=float))
    v3 = np.atleast_2d(np.asarray(v3, dtype=float))
    col1 = np.stack([-2 * v1[:, 1], -2 * v2[:, 1], -2 * v3[:, 1]], axis=-1)
    col2 = np.stack([2 * v1[:, 0], 2 * v2[:, 0], 2 * v3[:, 0]], axis=-1)
    col3 = np.ones_like(col1)
    b = np.stack([v1[:, 2], v2[:, 2], v3[:, 2]], axis=-1)
    det = _det3(col1, col2, col3)
    wedges = wedge(v1[:, :2], v2[:, :2]) + wedge(v2[:, :2], v3[:, :2]) + wedge(v3[:, :2], v1[:, :2])
    # |det DG| = 4 |z1^z2 + z2^z3 + z3^z1| (identity; also exercised in tests)
    scale = np.max(np.abs(np.stack([v1[:, :2], v2[:, :2], v3[:, :2]])), axis=(0, 2))
    degenerate = np.abs(det) <= det_tol_factor * scale**3
    safe = np.where(degenerate, 1.0, det)
    sol = np.stack(
        [
            _det3(b, col2, col3) / safe,
            _det3(col1, b, col3) / safe,
            _det3(col1, col2, b) / safe,
        ],
        axis=-1,
    )
    sol[degenerate] = np.nan
    return sol, degenerate, 4.0 * np.abs(wedges)


def triple_point_solve(v1, v2, v3, det_tol_factor: float = 1e-10):
    """Single-triple interface: (point or None, degenerate flag)."""
    sol, degenerate, _ = solve_triples(v1, v2, v3, det_tol_factor)
    if degenerate[0]:
        return None, True
    return sol[0], False


@dataclass
class IncidenceConfig:
    """Exponent bundle for the incidence experiment at one scale."""

    s: float
    kappa: float
    eta: float
    alpha: float
    delta: float
    t: float
    theta_separation: float  # delta^(4 eta), radians mod pi

    def __post_init__(self):
        if not self.t >= self.delta ** (1.0 - 100.0 * self.eta) * (1 - 1e-12):
            raise ValueError(
                f"annulus scale t={self.t} below delta^(1-100 eta)="
                f"{self.delta ** (1.0 - 100.0 * self.eta):.6g}"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def line_distance(self) -> float:
        return self.delta**self.alpha

    @property
    def bound_exponent(self) -> float:
        """delta-exponent of the dominant bound branch (the second one)."""
        return (1.0 - self.alpha) * (self.s - 1.0) - 1000.0 * self.eta

    @property
    def bound_exponent_first(self) -> float:
        return self.s / 2.0


def make_incidence_config(
    s: float,
    delta: float,
    t: float,
    kappa_value: float | None = None,
    kappa_margin: float = 1e-3,
) -> IncidenceConfig:
    """Config with kappa slightly above the critical exponent.

    At kappa exactly critical the margin formula gives eta = 0, which is
    rejected; the default nudges kappa by kappa_margin, shifting every
    exponent by less than a few times the margin.
    """
    k = kappa(s) + kappa_margin if kappa_value is None else kappa_value
    eta = eta_choice(s, k)
    alpha = alpha_exponent(s, k, eta)
    return IncidenceConfig(
        s=float(s),
        kappa=float(k),
        eta=eta,
        alpha=alpha,
        delta=float(delta),
        t=float(t),
        theta_separation=float(delta) ** (4.0 * eta),
    )


@dataclass
class IncidenceReport:
    """Monte Carlo (or exhaustive) quadruple count at one scale."""

    delta: float
    t: float
    normalized_count: float
    std_error: float
    qualifying_pairs: int
    inconclusive: bool
    n_centers: int
    triples_evaluated: int
    hits: int
    exhaustive: bool
    per_center: np.ndarray = field(default=None, repr=False)


def _circ_steps(a, b, grid):
    d = np.abs(a - b)
    return np.minimum(d, grid - d)


def _pack_masks(masks: np.ndarray) -> np.ndarray:
    """Bool (n, grid) angle masks to one integer word per row (grid <= 64)."""
    grid = masks.shape[1]
    bits = np.zeros((masks.shape[0], 64), dtype=np.uint8)
    bits[:, :grid] = masks
    return np.packbits(bits, axis=1, bitorder="little").view(np.uint64).ravel()


def _rot(x: np.ndarray, k: int, grid: int) -> np.ndarray:
    """Circular right rotation by k on the low `grid` bits."""
    k = k % grid
    if k == 0:
        return x
    if grid == 64:
        return (x >> np.uint64(k)) | (x << np.uint64(64 - k))
    mask = np.uint64((1 << grid) - 1)
    return ((x >> np.uint64(k)) | ((x << np.uint64(grid - k)) & mask)) & mask


def _separation_patterns(m: int, grid: int) -> list[tuple[int, int]]:
    """Cyclic gap patterns (g12, g12+g23) realizing pairwise separation >= m.

    Angles g1, g1+a, g1+a+b (mod grid) are pairwise >= m steps apart exactly
    when a, b and grid-a-b all are; enumerating (a, b) turns the existence
    check into a few rotate-and-AND probes.
    """
    if 3 * m > grid:
        return []
    return [
        (a, a + b)
        for a in range(m, grid - 2 * m + 1)
        for b in range(m, grid - m - a + 1)
    ]


def _separated_triples(b1: np.ndarray, b2: np.ndarray, b3: np.ndarray,
                       patterns, grid: int) -> np.ndarray:
    """Exact existence of pairwise-separated witness angles, vectorized.

    Both cyclic orders of (theta_2, theta_3) around theta_1 are probed.
    """
    ok = np.zeros(b1.shape, dtype=bool)
    for x, y in ((b2, b3), (b3, b2)):
        for a, ab in patterns:
            ok |= (b1 & _rot(x, a, grid) & _rot(y, ab, grid)) != 0
            if ok.all():
                return ok
    return ok


def _pair_angle_masks(cloud, vi, config, thetas, outer_ratio):
    """Annulus members of v's neighbourhood with their qualifying angles."""
    pts = cloud.points
    v = pts[vi]
    d = koranyi_dist(pts, v)
    ann = (d >= config.t) & (d <= outer_ratio * config.t)
    ann[vi] = False
    idx = np.flatnonzero(ann)
    if idx.size == 0:
        return idx, np.zeros((0, thetas.size), dtype=bool)
    # angle-free necessary bound: projections within 2 delta at some angle
    # force |T| <= 4 delta^2 + 4 delta |z + zeta|
    T = second_component(v, pts[idx])
    sz = np.hypot(v[0] + pts[idx, 0], v[1] + pts[idx, 1])
    keep = np.abs(T) <= 4.0 * config.delta * (config.delta + sz)
    idx = idx[keep]
    if idx.size == 0:
        return idx, np.zeros((0, thetas.size), dtype=bool)
    dproj = projected_distance(thetas[None, :], v[None, None, :], pts[idx, None, :])
    masks = dproj <= 2.0 * config.delta
    has = masks.any(axis=1)
    return idx[has], masks[has]


def _count_for_center(cloud, vi, config, thetas, outer_ratio, triples, rng,
                      chunk: int = 2_000_000):
    """Quadruple mass through center vi.

    triples=None enumerates all ordered triples of the neighbour list
    (exhaustive); otherwise samples that many with probability proportional
    to the weight product, returning an unbiased estimate.
    """
    grid = thetas.size
    idx, masks = _pair_angle_masks(cloud, vi, config, thetas, outer_ratio)
    L = idx.size
    out = {"pairs": L, "triples": 0, "hits": 0, "mass": 0.0}
    if L == 0:
        return out
    m_steps = int(np.ceil(config.theta_separation * grid / np.pi))
    patterns = _separation_patterns(m_steps, grid)
    if not patterns:
        return out  # separation infeasible on this grid
    packed = _pack_masks(masks)
    w = cloud.weights[idx]
    W_L = float(w.sum())
    total_w = cloud.total_mass

    if triples is None:
        total = L * L * L
        flat = np.arange(total)
        i1 = flat // (L * L)
        rem = flat - i1 * L * L
        i2 = rem // L
        i3 = rem - i2 * L
        weight_factor = None
    else:
        p = w / W_L
        i1 = rng.choice(L, size=triples, p=p)
        i2 = rng.choice(L, size=triples, p=p)
        i3 = rng.choice(L, size=triples, p=p)
        weight_factor = (W_L / total_w) ** 3
    out["triples"] = i1.size

    zc = cloud.points[vi, :2]
    zl = cloud.points[idx, :2]
    near_center = np.hypot(zl[:, 0] - zc[0], zl[:, 1] - zc[1]) < config.t / 2

    hit_mass = 0.0
    hits = 0
    for start in range(0, i1.size, chunk):
        s1 = i1[start:start + chunk]
        s2 = i2[start:start + chunk]
        s3 = i3[start:start + chunk]
        ok = _separated_triples(packed[s1], packed[s2], packed[s3], patterns, grid)
        # line condition applies when both outer planar parts are far from v's
        guard = ~(near_center[s1] | near_center[s3])
        if np.any(ok & guard):
            z1 = zl[s1]
            z2 = zl[s2]
            z3 = zl[s3]
            dirv = z1 - z3
            dlen = np.hypot(dirv[:, 0], dirv[:, 1])
            cross = np.abs(dirv[:, 0] * (z2 - z3)[:, 1] - dirv[:, 1] * (z2 - z3)[:, 0])
            with np.errstate(invalid="ignore", divide="ignore"):
                line_dist = np.where(dlen > 0, cross / dlen, 0.0)
            ok &= ~guard | ((dlen > 0) & (line_dist >= config.line_distance))
        hits += int(np.count_nonzero(ok))
        if weight_factor is None and np.any(ok):
            hit_mass += float((w[s1[ok]] * w[s2[ok]] * w[s3[ok]]).sum())
    out["hits"] = hits
    if weight_factor is None:
        out["mass"] = hit_mass / total_w**3
    else:
        out["mass"] = weight_factor * hits / max(out["triples"], 1)
    return out


def incidence_experiment(
    cloud: WeightedCloud,
    config: IncidenceConfig,
    theta_grid: int = 64,
    seed: int = 0,
    n_centers: int = 500,
    triples_per_center: int = 1000,
    outer_ratio: float = 2.0,
    exhaustive: bool = False,
    threads: int | None = None,
) -> IncidenceReport:
    """Normalized incidence-quadruple count at one scale.

    Exhaustive mode enumerates every (center, triple) exactly; otherwise
    centers are drawn from the measure and triples subsampled per center.
    Fewer than 100 qualifying pairs in total marks the result inconclusive
    rather than reporting a silent zero.
    """
    thetas = np.arange(theta_grid) * np.pi / theta_grid
    rng = np.random.default_rng(int(seed))
    if exhaustive:
        centers = np.arange(len(cloud))
        triples = None
    else:
        p = cloud.weights / cloud.total_mass
        centers = rng.choice(len(cloud), size=int(n_centers), p=p)
        triples = int(triples_per_center)
    seeds = rng.integers(0, 2**63 - 1, size=centers.size)

    def run(task):
        vi, s = task
        return _count_for_center(
            cloud, int(vi), config, thetas, outer_ratio, triples, np.random.default_rng(int(s))
        )

    rows = ordered_map(run, zip(centers, seeds), threads)
    pairs = int(sum(r["pairs"] for r in rows))
    n_triples = int(sum(r["triples"] for r in rows))
    hits = int(sum(r["hits"] for r in rows))
    if exhaustive:
        wc = cloud.weights[centers] / cloud.total_mass
        per_center = np.array([r["mass"] for r in rows])
        count = float((wc * per_center).sum())
        se = 0.0
    else:
        per_center = np.array([r["mass"] for r in rows])
        count = float(per_center.mean())
        se = float(per_center.std(ddof=1) / np.sqrt(per_center.size)) if per_center.size > 1 else 0.0
    return IncidenceReport(
        delta=config.delta,
        t=config.t,
        normalized_count=count,
        std_error=se,
        qualifying_pairs=pairs,
        inconclusive=pairs < 100,
        n_centers=int(centers.size),
        triples_evaluated=n_triples,
        hits=hits,
        exhaustive=bool(exhaustive),
        per_center=per_center,
    )


@dataclass
class IncidenceSweepReport:
    """Count scaling across a delta sweep against the bound exponent."""

    deltas: np.ndarray
    reports: list
    slope: DimensionEstimate
    bound_exponent: float
    upper_bound_consistent: bool

    def table(self) -> str:
        lines = ["# delta count std_error pairs inconclusive slope bound_exponent"]
        for d, r in zip(self.deltas, self.reports):
            lines.append(
                f"{d:.8g} {r.normalized_count:.8g} {r.std_error:.3g} "
                f"{r.qualifying_pairs} {int(r.inconclusive)} "
                f"{self.slope.slope:.6g} {self.bound_exponent:.6g}"
            )
        return "\n".join(lines)


def incidence_sweep(
    cloud: WeightedCloud,
    s: float,
    deltas,
    t: float,
    theta_grid: int = 64,
    seed: int = 0,
    n_centers: int = 500,
    triples_per_center: int = 1000,
    kappa_margin: float = 1e-3,
    threads: int | None = None,
) -> IncidenceSweepReport:
    """Fit the count's delta-scaling and compare with the bound exponent.

    The upper bound count <= C max{t^(2s) delta^(s/2), t^(1+s) delta^E}
    holds for a fitted constant iff the count decays at least as fast as
    the dominant branch: fitted slope >= E within tolerance.
    """
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1]
    reports = []
    for i, d in enumerate(deltas):
        config = make_incidence_config(s, float(d), t, kappa_margin=kappa_margin)
        reports.append(
            incidence_experiment(
                cloud,
                config,
                theta_grid=theta_grid,
                seed=seed + i,
                n_centers=n_centers,
                triples_per_center=triples_per_center,
                threads=threads,
            )
        )
    usable = [(d, r.normalized_count) for d, r in zip(deltas, reports) if not r.inconclusive]
    xs = np.array([u[0] for u in usable])
    ys = np.array([u[1] for u in usable])
    slope = fit_loglog(xs, ys) if xs.size >= 2 else DimensionEstimate(0, 0, 0, (0, 0), True, 0)
    exponent = make_incidence_config(s, float(deltas[0]), t, kappa_margin=kappa_margin).bound_exponent
    return IncidenceSweepReport(
        deltas=deltas,
        reports=reports,
        slope=slope,
        bound_exponent=exponent,
        upper_bound_consistent=bool(slope.slope >= exponent - 0.3) if not slope.degenerate else False,
    )
