"""Covering Euclidean balls by Koranyi balls of the same radius.

A Euclidean ball of radius r is only r^2-thick in the group's vertical
direction relative to Koranyi balls, so about 1/r of them are needed:
counts here scale like N/r for an absolute constant N.  The construction
places ball centers on a planar lattice of spacing ~r and, per planar
column, a vertical ladder of spacing ~r^2 whose extent absorbs the twist
term 2 e^(v_z + a) left over after the column shears cancel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import koranyi_dist
from .estimates import DimensionEstimate, fit_loglog

__all__ = ["CoverResult", "CoverageError", "cover_euclidean_ball", "verify_cover", "cover_scaling"]


class CoverageError(RuntimeError):
    """A rejection-sampled point of the Euclidean ball was not covered."""


@dataclass
class CoverResult:
    """Koranyi-ball cover of B_E(center, radius) with column lookup tables."""

    center: np.ndarray
    radius: float
    centers: np.ndarray
    planar_spacing: float
    vertical_spacing: float
    column_offsets: np.ndarray  # (n_cols, 2) planar lattice offsets a
    column_kmin: np.ndarray
    column_base: np.ndarray  # index of (a, kmin) in centers

    @property
    def count(self) -> int:
        return self.centers.shape[0]


def cover_euclidean_ball(v, r: float, planar_spacing: float = 0.5,
                         vertical_spacing: float = 0.5) -> CoverResult:
    """Cover B_E(v, r), |v| <= 1, r in (0,1), by Koranyi balls of radius r.

    Spacings are multiples of r (planar) and r^2 (vertical).  Each planar
    column holds exactly the ladder range needed for the heights |s| <= r
    plus the twist slack 2*halfdiag*|v_z+a|, pruned per column.
    """
    v = np.asarray(v, dtype=float)
    r = float(r)
    if not 0 < r < 1:
        raise ValueError("radius must lie in (0, 1)")
    if np.linalg.norm(v) > 1 + 1e-12:
        raise ValueError("ball center must satisfy |v| <= 1")
    h = planar_spacing * r
    hv = vertical_spacing * r * r
    halfdiag = h * np.sqrt(2.0) / 2.0
    reach = int(np.ceil((r + halfdiag) / h))
    ii, jj = np.meshgrid(np.arange(-reach, reach + 1), np.arange(-reach, reach + 1), indexing="ij")
    a = np.column_stack([ii.ravel() * h, jj.ravel() * h])
    a = a[np.hypot(a[:, 0], a[:, 1]) <= r + halfdiag]
    # per-column height range: ball thickness at the column plus twist slack
    dist_in = np.maximum(np.hypot(a[:, 0], a[:, 1]) - halfdiag, 0.0)
    s_max = np.sqrt(np.maximum(r**2 - dist_in**2, 0.0))
    twist = 2.0 * halfdiag * np.hypot(v[0] + a[:, 0], v[1] + a[:, 1])
    kmax = np.ceil((s_max + twist + hv / 2.0) / hv).astype(np.int64)
    counts = 2 * kmax + 1
    base = np.concatenate([[0], np.cumsum(counts)[:-1]])
    total = int(counts.sum())
    centers = np.empty((total, 3))
    col = np.repeat(np.arange(a.shape[0]), counts)
    k = np.arange(total) - np.repeat(base, counts) - np.repeat(kmax, counts)
    centers[:, 0] = v[0] + a[col, 0]
    centers[:, 1] = v[1] + a[col, 1]
    centers[:, 2] = v[2] + k * hv
    return CoverResult(
        center=v,
        radius=r,
        centers=centers,
        planar_spacing=h,
        vertical_spacing=hv,
        column_offsets=a,
        column_kmin=-kmax,
        column_base=base,
    )


def _witness_indices(cover: CoverResult, samples: np.ndarray) -> np.ndarray:
    """Index of the construction's candidate covering center per sample."""
    v = cover.center
    h = cover.planar_spacing
    hv = cover.vertical_spacing
    u = samples[:, :2] - v[:2]
    ij = np.round(u / h).astype(np.int64)
    a = ij * h
    # match the rounded offset to its column (columns are pruned, so search)
    key = ij[:, 0] * (1 << 32) + ij[:, 1]
    col_ij = np.round(cover.column_offsets / h).astype(np.int64)
    col_key = col_ij[:, 0] * (1 << 32) + col_ij[:, 1]
    order = np.argsort(col_key)
    pos = np.searchsorted(col_key[order], key)
    pos = np.minimum(pos, col_key.size - 1)
    col = order[pos]
    found = col_key[col] == key
    e = u - a
    s = samples[:, 2] - v[2]
    twist = e[:, 0] * (v[1] + a[:, 1]) - e[:, 1] * (v[0] + a[:, 0])
    k = np.round((s - 2.0 * twist) / hv).astype(np.int64)
    kmin = cover.column_kmin[col]
    kmax = -kmin
    k = np.clip(k, kmin, kmax)
    idx = cover.column_base[col] + (k - kmin)
    idx[~found | (idx >= cover.centers.shape[0])] = -1
    return idx


def verify_cover(cover: CoverResult, n_samples: int = 100_000, seed: int = 0) -> float:
    """Rejection-sample the Euclidean ball; every point must be covered.

    Returns the worst sample-to-assigned-center Koranyi distance.  Samples
    whose constructed witness is not within the radius fall back to a brute
    search over all centers; an uncovered sample raises CoverageError.
    """
    rng = np.random.default_rng(int(seed))
    n = int(n_samples)
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    radii = cover.radius * rng.random(n) ** (1.0 / 3.0)
    samples = cover.center + dirs * radii[:, None]
    idx = _witness_indices(cover, samples)
    ok = idx >= 0
    d = np.full(n, np.inf)
    d[ok] = koranyi_dist(samples[ok], cover.centers[idx[ok]])
    worst = float(d[ok].max()) if np.any(ok) else 0.0
    misses = np.flatnonzero(d > cover.radius)
    for m in misses:
        dm = koranyi_dist(cover.centers, samples[m])
        if not np.any(dm <= cover.radius):
            raise CoverageError(
                f"sample {samples[m]} of B_E({cover.center}, {cover.radius}) is uncovered"
            )
        worst = max(worst, float(dm.min()))
    return worst


@dataclass
class CoverScalingReport:
    """Cover counts across radii with the fitted count ~ 1/r scaling."""

    radii: np.ndarray
    counts: np.ndarray
    n_empirical: float  # single constant with count <= ceil(N/r) across the sweep
    slope: DimensionEstimate
    worst_distance: float

    def table(self) -> str:
        lines = ["# r count ceil(N_emp/r)"]
        for r, c in zip(self.radii, self.counts):
            lines.append(f"{r:.8g} {int(c)} {int(np.ceil(self.n_empirical / r))}")
        return "\n".join(lines)


def cover_scaling(v, radii, n_samples: int = 100_000, seed: int = 0) -> CoverScalingReport:
    """Build and verify covers across radii; fit log count vs log(1/r)."""
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    counts = np.empty(radii.size)
    worst = 0.0
    for i, r in enumerate(radii):
        cover = cover_euclidean_ball(v, float(r))
        counts[i] = cover.count
        worst = max(worst, verify_cover(cover, n_samples=n_samples, seed=seed + i))
    n_emp = float(np.max(counts * radii))
    slope = fit_loglog(radii, counts, x_transform=lambda s: 1.0 / s)
    return CoverScalingReport(radii=radii, counts=counts, n_empirical=n_emp,
                              slope=slope, worst_distance=worst)
