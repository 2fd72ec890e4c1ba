"""Weighted point clouds standing in for compactly supported Borel measures.

Generators produce clouds with a known target dimension (unit cube, curves
and planes inside horizontal/vertical subgroups, group-self-similar sets),
and frostman_exponent estimates the best exponent s such that every metric
ball satisfies mass(B(x,r)) <= C r^s over a range of radii.

Discrete clouds only resolve scales above their resolution (the smallest
nearest-neighbour Koranyi distance); below it every finite measure looks
zero-dimensional, so radius grids are cut off there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import chart_embed, group_mul, koranyi_dist, second_component, unit_vector
from .estimates import DimensionEstimate, fit_loglog

__all__ = [
    "WeightedCloud",
    "IfsSpec",
    "sample_cube",
    "sample_horizontal_line",
    "sample_vertical_plane",
    "ifs_generate",
    "ball_mass",
    "frostman_exponent",
    "save_cloud",
    "load_cloud",
]

CLOUD_FORMAT_TAG = "#heis-cloud v1"


@dataclass
class WeightedCloud:
    """Finite point set with nonnegative weights and positive total mass."""

    points: np.ndarray
    weights: np.ndarray
    label: str = ""
    nominal_dimension: float | None = None
    _resolution: float | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=float)
        self.weights = np.ascontiguousarray(self.weights, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {self.points.shape}")
        if self.weights.shape != (self.points.shape[0],):
            raise ValueError("weights and points must have equal length")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("cloud points must be finite")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")
        if self.points.shape[0] == 0 or not self.weights.sum() > 0:
            raise ValueError("cloud must carry positive total mass")
        # recorded compact support
        self.bbox = (self.points.min(axis=0), self.points.max(axis=0))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def resolution(self) -> float:
        """Smallest nearest-neighbour Koranyi distance (cached)."""
        if self._resolution is None:
            self._resolution = _min_pair_distance(self.points)
        return self._resolution


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def sample_cube(n: int, seed: int) -> WeightedCloud:
    """n uniform points in [0,1]^3 with equal weights summing to 1.

    The ambient group has Hausdorff dimension 4, which this cloud calibrates.
    """
    if n < 1:
        raise ValueError("need at least one sample point")
    pts = _rng(seed).random((int(n), 3))
    w = np.full(int(n), 1.0 / int(n))
    return WeightedCloud(pts, w, label="cube", nominal_dimension=4.0)


def sample_horizontal_line(theta: float, n: int, seed: int) -> WeightedCloud:
    """Unit-length piece of the horizontal subgroup {(lam e^{i theta}, 0)}.

    The Koranyi metric restricted to a horizontal line is Euclidean, so the
    target dimension is 1.
    """
    if n < 1:
        raise ValueError("need at least one sample point")
    lam = _rng(seed).random(int(n))
    e = unit_vector(float(theta))
    pts = np.zeros((int(n), 3))
    pts[:, 0] = lam * e[0]
    pts[:, 1] = lam * e[1]
    w = np.full(int(n), 1.0 / int(n))
    return WeightedCloud(pts, w, label=f"hline(theta={theta:.6g})", nominal_dimension=1.0)


def sample_vertical_plane(theta: float, n: int, seed: int) -> WeightedCloud:
    """Unit chart square inside the vertical plane at theta (dimension 3).

    A chart-metric ball of radius r has measure about r * r^2 = r^3.
    """
    if n < 1:
        raise ValueError("need at least one sample point")
    lam = _rng(seed).random((int(n), 2))
    pts = chart_embed(float(theta), lam)
    w = np.full(int(n), 1.0 / int(n))
    return WeightedCloud(pts, w, label=f"vplane(theta={theta:.6g})", nominal_dimension=3.0)


@dataclass
class IfsSpec:
    """Iterated function system of group similarities x -> p_i * dilate(r_i, x).

    translations is an (m, 3) array of group elements p_i and ratios the
    corresponding contraction ratios in (0, 1).  With well-separated pieces
    the attractor has similarity dimension solving sum r_i^d = 1.
    """

    translations: np.ndarray
    ratios: np.ndarray
    depth: int

    def __post_init__(self):
        self.translations = np.atleast_2d(np.asarray(self.translations, dtype=float))
        self.ratios = np.atleast_1d(np.asarray(self.ratios, dtype=float))
        if self.translations.shape[1] != 3:
            raise ValueError("translations must have shape (m, 3)")
        if self.ratios.shape[0] != self.translations.shape[0]:
            raise ValueError("need one ratio per translation")
        if np.any(self.ratios <= 0) or np.any(self.ratios >= 1):
            raise ValueError("every ratio must lie strictly between 0 and 1")
        if self.depth < 1:
            raise ValueError("depth must be a positive integer")

    @property
    def n_maps(self) -> int:
        return self.translations.shape[0]

    def similarity_dimension(self) -> float:
        """Solve sum r_i^d = 1; zero for a single map."""
        if self.n_maps == 1:
            return 0.0
        f = lambda d: np.sum(self.ratios**d) - 1.0
        return float(brentq(f, 1e-12, 64.0))

    def separation_ok(self, margin: float = 1e-9) -> bool:
        """Pairwise Koranyi distance of the map centers exceeds the summed radii.

        Images of the unit ball under the maps are then pairwise disjoint and
        the similarity-dimension claim is meaningful.
        """
        m = self.n_maps
        for i in range(m):
            for j in range(i + 1, m):
                d = float(koranyi_dist(self.translations[i], self.translations[j]))
                if not d > (self.ratios[i] + self.ratios[j]) * (1.0 + margin):
                    return False
        return True


def default_ifs(n_maps: int = 8, ratio: float = 0.5, depth: int = 5) -> IfsSpec:
    """Well-separated m-map system with equal ratios.

    Translations sit on {0,a}^2 x {0,b,...} with a, b large enough that the
    map centers are pairwise farther apart than 2*ratio, so the separation
    check passes.  8 maps at ratio 1/2 give similarity dimension 3; 16 maps
    reach the ambient dimension 4.
    """
    if n_maps not in (8, 16):
        raise ValueError("built-in system supports 8 or 16 maps")
    a = 2.2 * ratio
    b = 4.9 * ratio**2
    planar = [(0.0, 0.0), (a, 0.0), (0.0, a), (a, a)]
    heights = [0.0, b] if n_maps == 8 else [0.0, b, 2 * b, 3 * b]
    trans = np.array([[px, py, h] for h in heights for (px, py) in planar])
    return IfsSpec(trans, np.full(n_maps, ratio), depth)


def ifs_generate(spec: IfsSpec, seed: int, max_points: int = 200_000) -> WeightedCloud:
    """All depth-d images of the origin under words in the system's maps.

    The point count m^depth is capped at max_points by random pruning at each
    level (deterministic given the seed).  Fails if the separation check
    fails, since the dimension claim would be void.
    """
    if not spec.separation_ok():
        raise ValueError("IFS separation check failed: map images overlap")
    rng = _rng(seed)
    pts = np.zeros((1, 3))
    for _ in range(spec.depth):
        images = []
        for i in range(spec.n_maps):
            scaled = pts.copy()
            scaled[:, :2] *= spec.ratios[i]
            scaled[:, 2] *= spec.ratios[i] ** 2
            images.append(group_mul(spec.translations[i], scaled))
        pts = np.concatenate(images, axis=0)
        if pts.shape[0] > max_points:
            keep = np.sort(rng.choice(pts.shape[0], size=max_points, replace=False))
            pts = pts[keep]
    w = np.full(pts.shape[0], 1.0 / pts.shape[0])
    label = f"ifs(m={spec.n_maps}, depth={spec.depth})"
    return WeightedCloud(pts, w, label=label, nominal_dimension=spec.similarity_dimension())


# ---------------------------------------------------------------------------
# fixed-radius neighbour search
#
# Candidate pruning hashes the planar coordinates only, on a grid of cell
# size r, and rechecks the exact Koranyi distance per candidate.  The twist
# term 2 z^zeta moves a ball's t-extent by O(|z| r), which dwarfs the r^2
# vertical thickness away from the center fiber, so keying t buys nothing.


class PlanarHash:
    """Points bucketed by planar cell; queries return exact metric balls."""

    def __init__(self, points: np.ndarray, cell: float):
        if not cell > 0:
            raise ValueError("cell size must be positive")
        self.points = points
        self.cell = float(cell)
        ix = np.floor(points[:, 0] / cell).astype(np.int64)
        iy = np.floor(points[:, 1] / cell).astype(np.int64)
        keys = self._pack(ix, iy)
        # within each cell, order points by t so height windows are slices
        order = np.lexsort((points[:, 2], keys))
        self.order = order
        self.sorted_keys = keys[order]
        self.sorted_t = points[order, 2]
        starts = np.flatnonzero(np.r_[True, self.sorted_keys[1:] != self.sorted_keys[:-1]])
        self.cell_starts = starts
        self.cell_ends = np.r_[starts[1:], points.shape[0]]
        self.cell_ix = ix[order][starts]
        self.cell_iy = iy[order][starts]
        self.cell_keys = self.sorted_keys[starts]

    @staticmethod
    def _pack(ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
        return (ix.astype(np.int64) << 32) + (iy.astype(np.int64) & 0xFFFFFFFF)

    def candidates(self, center_z: np.ndarray, radius: float) -> np.ndarray:
        """Indices of points with planar cells within radius of center_z."""
        reach = int(np.ceil(radius / self.cell)) + 1
        cx = int(np.floor(center_z[0] / self.cell))
        cy = int(np.floor(center_z[1] / self.cell))
        xs = np.arange(cx - reach, cx + reach + 1, dtype=np.int64)
        ys = np.arange(cy - reach, cy + reach + 1, dtype=np.int64)
        keys = self._pack(np.repeat(xs, ys.size), np.tile(ys, xs.size))
        lo = np.searchsorted(self.sorted_keys, keys, side="left")
        hi = np.searchsorted(self.sorted_keys, keys, side="right")
        picks = [self.order[a:b] for a, b in zip(lo, hi) if b > a]
        if not picks:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(picks)

    def _expand_batch(self, src, tgt, counts_a, counts_b, same: bool):
        """All point-index pairs for a batch of matched cells, vectorized."""
        tot = counts_a * counts_b
        total = int(tot.sum())
        if total == 0:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        k = np.repeat(np.arange(src.size), tot)
        offs = np.concatenate([[0], np.cumsum(tot)[:-1]])
        l = np.arange(total) - np.repeat(offs, tot)
        m = counts_b[k]
        i_loc = l // m
        j_loc = l - i_loc * m
        gi = self.order[self.cell_starts[src[k]] + i_loc]
        gj = self.order[self.cell_starts[tgt[k]] + j_loc]
        if same:
            keep = gi < gj
            gi, gj = gi[keep], gj[keep]
        return gi, gj

    def _window_pairs(self, c: int, p: int, same: bool, t_window: float):
        """Pairs between cells c and p whose heights differ by <= t_window."""
        s_a, e_a = self.cell_starts[c], self.cell_ends[c]
        s_b, e_b = self.cell_starts[p], self.cell_ends[p]
        ta = self.sorted_t[s_a:e_a]
        tb = self.sorted_t[s_b:e_b]
        if same:
            # j strictly after i in the cell's t-order
            hi = np.searchsorted(ta, ta + t_window, side="right")
            los = np.arange(1, ta.size + 1)
        else:
            hi = np.searchsorted(tb, ta + t_window, side="right")
            los = np.searchsorted(tb, ta - t_window, side="left")
        counts = np.maximum(hi - los, 0)
        total = int(counts.sum())
        if total == 0:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        i_loc = np.repeat(np.arange(ta.size), counts)
        offs = np.concatenate([[0], np.cumsum(counts)[:-1]])
        j_loc = np.arange(total) - np.repeat(offs - los, counts)
        gi = self.order[s_a + i_loc]
        gj = self.order[(s_a if same else s_b) + j_loc]
        return gi, gj

    def _expand_matches(self, src, tgt, same: bool, chunk: int, t_window: float | None):
        """Expand matched cell pairs into point-index pair chunks."""
        counts_a = self.cell_ends[src] - self.cell_starts[src]
        counts_b = self.cell_ends[tgt] - self.cell_starts[tgt]
        tot = counts_a * counts_b
        # products large enough that the height window pays for itself go
        # through the per-match path; the rest expand vectorized
        big = tot > (256 if t_window is not None else chunk)
        small = np.flatnonzero(~big)
        if small.size:
            groups = (np.cumsum(tot[small]) - 1) // chunk
            cuts = np.flatnonzero(np.diff(groups)) + 1
            for sel in np.split(small, cuts):
                gi, gj = self._expand_batch(
                    src[sel], tgt[sel], counts_a[sel], counts_b[sel], same
                )
                if gi.size and t_window is not None:
                    keep = np.abs(self.points[gi, 2] - self.points[gj, 2]) <= t_window
                    gi, gj = gi[keep], gj[keep]
                if gi.size:
                    yield gi, gj
        for kk in np.flatnonzero(big):
            c, p = src[kk], tgt[kk]
            if t_window is not None:
                gi, gj = self._window_pairs(c, p, same, t_window)
                for start in range(0, gi.size, chunk):
                    if gi[start:start + chunk].size:
                        yield gi[start:start + chunk], gj[start:start + chunk]
                continue
            a = self.order[self.cell_starts[c]:self.cell_ends[c]]
            b = self.order[self.cell_starts[p]:self.cell_ends[p]]
            rows = max(1, chunk // max(1, b.size))
            for astart in range(0, a.size, rows):
                ablk = a[astart:astart + rows]
                gi = np.repeat(ablk, b.size)
                gj = np.tile(b, ablk.size)
                if same:
                    keep = gi < gj
                    gi, gj = gi[keep], gj[keep]
                if gi.size:
                    yield gi, gj

    def pair_candidates(self, radius: float, t_window: float | None = None,
                        chunk: int = 2_000_000):
        """Yield (i, j) index-array chunks covering every unordered pair with
        planar separation <= radius exactly once; callers recheck distances.

        t_window additionally drops pairs whose heights differ by more than
        the window, which keeps vertically stacked clouds tractable.
        """
        reach = int(np.ceil(radius / self.cell)) + 1
        # half-plane offsets so each unordered cell pair is visited once
        offsets = [(0, 0)] + [
            (dx, dy)
            for dx in range(0, reach + 1)
            for dy in range(-reach, reach + 1)
            if (dx > 0 or dy > 0)
        ]
        all_cells = np.arange(self.cell_keys.size)
        for dx, dy in offsets:
            same = (dx == 0) and (dy == 0)
            if same:
                src = tgt = all_cells
            else:
                nbr = self._pack(self.cell_ix + dx, self.cell_iy + dy)
                pos = np.searchsorted(self.cell_keys, nbr)
                pos_c = np.minimum(pos, self.cell_keys.size - 1)
                ok = self.cell_keys[pos_c] == nbr
                src = np.flatnonzero(ok)
                tgt = pos_c[src]
            if src.size == 0:
                continue
            yield from self._expand_matches(src, tgt, same, chunk, t_window)


def _min_pair_distance(points: np.ndarray) -> float:
    """Exact minimum pairwise Koranyi distance.

    Phase 1 scans consecutive points in cell-then-height order for a cheap
    upper bound b; phase 2 enumerates exactly the pairs with planar
    separation <= b and height gap <= b^2 + 2 max|z| b, which contains every
    pair at distance <= b, and takes the true minimum over them.
    """
    n = points.shape[0]
    if n < 2:
        return 0.0
    if n <= 2000:
        d = koranyi_dist(points[:, None, :], points[None, :, :])
        iu = np.triu_indices(n, k=1)
        return float(d[iu].min())
    span = float(np.max(points.max(axis=0) - points.min(axis=0))) or 1.0
    h0 = PlanarHash(points, span / n**0.5)
    consecutive = koranyi_dist(points[h0.order[:-1]], points[h0.order[1:]])
    best = float(consecutive[consecutive > 0].min()) if np.any(consecutive > 0) else 0.0
    if best == 0.0:
        return 0.0
    r_z = float(np.hypot(points[:, 0], points[:, 1]).max())
    b = best
    h = PlanarHash(points, b)
    window = b * b + 2.0 * r_z * b
    for pi, pj in h.pair_candidates(b, t_window=window):
        d = koranyi_dist(points[pi], points[pj])
        positive = d[d > 0]
        if positive.size:
            best = min(best, float(positive.min()))
    return best


def ball_mass(cloud: WeightedCloud, centers: np.ndarray, radius: float) -> np.ndarray:
    """nu(B(x, r)) for each center x: total weight within Koranyi distance r."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    h = PlanarHash(cloud.points, radius)
    out = np.empty(centers.shape[0])
    for k, c in enumerate(centers):
        idx = h.candidates(c[:2], radius)
        if idx.size == 0:
            out[k] = 0.0
            continue
        d = koranyi_dist(cloud.points[idx], c)
        out[k] = float(cloud.weights[idx][d <= radius].sum())
    return out


def frostman_exponent(
    cloud: WeightedCloud,
    radii,
    centers_per_radius: int = 64,
    seed: int = 0,
) -> DimensionEstimate:
    """Best empirical Frostman exponent from max ball masses.

    For each radius r the maximum of nu(B(x, r)) over centers drawn from the
    cloud estimates the tightest constant in mass <= C r^s; the slope of
    log max-mass against log r estimates s.  Radii must span at least 1.5
    decades; radii below the cloud resolution are cut off before fitting.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size < 2 or np.any(radii <= 0):
        raise ValueError("need at least two positive radii")
    if radii[-1] / radii[0] < 10**1.5 * (1 - 1e-12):
        raise ValueError("radii must span at least 1.5 decades")
    if centers_per_radius < 1:
        raise ValueError("need at least one center per radius")
    res = cloud.resolution()
    usable = radii[radii >= res]
    if usable.size < 2:
        raise ValueError(
            f"only {usable.size} radii at or above the cloud resolution {res:.3g}"
        )
    rng = _rng(seed)
    p = cloud.weights / cloud.total_mass
    masses = np.empty(usable.size)
    for k, r in enumerate(usable):
        picks = rng.choice(len(cloud), size=centers_per_radius, p=p)
        masses[k] = ball_mass(cloud, cloud.points[picks], float(r)).max()
    return fit_loglog(usable, masses)


def save_cloud(cloud: WeightedCloud, path) -> None:
    """Write 'x y t w' rows under the '#heis-cloud v1 n=<count>' header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{CLOUD_FORMAT_TAG} n={len(cloud)}\n")
        if cloud.label:
            fh.write(f"# label: {cloud.label}\n")
        if cloud.nominal_dimension is not None:
            fh.write(f"# nominal-dimension: {cloud.nominal_dimension:.17g}\n")
        for (x, y, t), w in zip(cloud.points, cloud.weights):
            fh.write(f"{x:.17g} {y:.17g} {t:.17g} {w:.17g}\n")


def load_cloud(path) -> WeightedCloud:
    """Read a cloud written by save_cloud."""
    label = ""
    nominal = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith(CLOUD_FORMAT_TAG):
            raise ValueError(f"not a heis-cloud file: header {header!r}")
        declared = int(header.split("n=")[1])
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# label:"):
                    label = line.split(":", 1)[1].strip()
                elif line.startswith("# nominal-dimension:"):
                    nominal = float(line.split(":", 1)[1])
                continue
            rows.append([float(tok) for tok in line.split()])
    data = np.asarray(rows, dtype=float)
    if data.shape[0] != declared:
        raise ValueError(f"header declares n={declared} but file has {data.shape[0]} rows")
    return WeightedCloud(data[:, :3], data[:, 3], label=label, nominal_dimension=nominal)
