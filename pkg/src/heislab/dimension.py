"""Box-counting and correlation dimension estimators in the Koranyi metric.

Grids are anisotropic: a cell at scale delta measures delta x delta x
delta^2, matching the shape of Koranyi balls, so occupied-cell counts of a
d-dimensional set scale like delta^(-d) with d measured in the group
metric (the ambient space has dimension 4).  Projected sets in a vertical
plane use the 2-coordinate parabolic analogue delta x delta^2.
"""

from __future__ import annotations

import numpy as np

from .core import koranyi_dist
from .estimates import DimensionEstimate, fit_loglog
from .measures import PlanarHash, WeightedCloud

__all__ = [
    "box_count",
    "box_dimension",
    "chart_box_count",
    "chart_box_dimension",
    "correlation_dimension",
    "default_scales",
]

ORIGIN = (0.0, 0.0, 0.0)


def _points_of(cloud) -> np.ndarray:
    if isinstance(cloud, WeightedCloud):
        return cloud.points
    return np.asarray(cloud, dtype=float)


def _occupied(cells: np.ndarray) -> int:
    # pack integer cell triples/pairs into one int64 per point
    base = np.int64(1) << 21
    key = cells[:, 0]
    for k in range(1, cells.shape[1]):
        key = key * base + cells[:, k]
    return int(np.unique(key).size)


def box_count(cloud, delta: float, anchor=ORIGIN) -> int:
    """Number of occupied delta x delta x delta^2 grid cells."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    pts = _points_of(cloud)
    a = np.asarray(anchor, dtype=float)
    cells = np.empty((pts.shape[0], 3), dtype=np.int64)
    cells[:, 0] = np.floor((pts[:, 0] - a[0]) / delta)
    cells[:, 1] = np.floor((pts[:, 1] - a[1]) / delta)
    cells[:, 2] = np.floor((pts[:, 2] - a[2]) / (delta * delta))
    return _occupied(cells)


def _check_scales(scales, resolution: float | None) -> np.ndarray:
    scales = np.sort(np.asarray(scales, dtype=float))[::-1]
    if scales.size < 4:
        raise ValueError("need at least 4 scales")
    ratios = scales[:-1] / scales[1:]
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("scales must be geometrically spaced")
    if resolution is not None and scales[-1] < resolution:
        raise ValueError(
            f"finest scale {scales[-1]:.3g} is below the cloud resolution {resolution:.3g}"
        )
    return scales


def box_dimension(cloud, scales, anchor=ORIGIN) -> DimensionEstimate:
    """Least-squares slope of log box_count against log(1/delta)."""
    res = cloud.resolution() if isinstance(cloud, WeightedCloud) else None
    scales = _check_scales(scales, res)
    counts = np.array([box_count(cloud, d, anchor) for d in scales], dtype=float)
    return fit_loglog(scales, counts, x_transform=lambda s: 1.0 / s)


def chart_box_count(points, delta: float, anchor=(0.0, 0.0)) -> int:
    """Occupied parabolic delta x delta^2 cells for chart coordinates."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    pts = np.asarray(points, dtype=float)
    a = np.asarray(anchor, dtype=float)
    cells = np.empty((pts.shape[0], 2), dtype=np.int64)
    cells[:, 0] = np.floor((pts[:, 0] - a[0]) / delta)
    cells[:, 1] = np.floor((pts[:, 1] - a[1]) / (delta * delta))
    return _occupied(cells)


def chart_box_dimension(points, scales, anchor=(0.0, 0.0)) -> DimensionEstimate:
    """box_dimension for 2-coordinate points of a vertical-plane chart."""
    scales = _check_scales(scales, None)
    counts = np.array([chart_box_count(points, d, anchor) for d in scales], dtype=float)
    return fit_loglog(scales, counts, x_transform=lambda s: 1.0 / s)


def correlation_dimension(cloud: WeightedCloud, scales) -> DimensionEstimate:
    """Slope of the correlation integral: log pair-mass fraction vs log r.

    The fraction at radius r is sum_{i<j} w_i w_j [d(x_i,x_j) <= r] divided
    by the total pair mass sum_{i<j} w_i w_j.  Pairs come from the planar
    spatial hash at the largest scale (all-pairs below 2000 points).
    """
    scales = np.sort(np.asarray(scales, dtype=float))
    if scales.size == 0:
        raise ValueError("empty scale window")
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    pts = cloud.points
    w = cloud.weights
    n = len(cloud)
    rmax = float(scales[-1])
    sums = np.zeros(scales.size)
    if n < 2000:
        iu, ju = np.triu_indices(n, k=1)
        d = koranyi_dist(pts[iu], pts[ju])
        ww = w[iu] * w[ju]
        for k, r in enumerate(scales):
            sums[k] = float(ww[d <= r].sum())
    else:
        h = PlanarHash(pts, rmax)
        r_z = float(np.hypot(pts[:, 0], pts[:, 1]).max())
        window = rmax * rmax + 2.0 * r_z * rmax
        for pi, pj in h.pair_candidates(rmax, t_window=window):
            d = koranyi_dist(pts[pi], pts[pj])
            ww = w[pi] * w[pj]
            for k, r in enumerate(scales):
                sums[k] += float(ww[d <= r].sum())
    total = 0.5 * (cloud.total_mass**2 - float((w**2).sum()))
    fractions = sums / total
    est = fit_loglog(scales, fractions)
    if np.unique(sums[sums > 0]).size < 2:
        est.degenerate = True
    return est


def default_scales(cloud: WeightedCloud) -> np.ndarray:
    """Ratio-2 geometric scales from 2^-2 down to max(2^-8, 4x resolution)."""
    floor = max(2.0**-8, 4.0 * cloud.resolution())
    out = []
    d = 2.0**-2
    while d >= floor and len(out) < 32:
        out.append(d)
        d /= 2.0
    if len(out) < 4:
        out = [2.0**-2 / 2**k for k in range(4)]
    return np.asarray(out)
