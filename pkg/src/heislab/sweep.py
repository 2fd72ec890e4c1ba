"""Projection-angle experiments and dimension lower-bound curves.

For a cloud nu and an angle grid on [0, pi), the sweep projects the cloud
onto each vertical plane, estimates the box dimension of the projection in
chart coordinates, and compares the profile against three lower-bound
curves for the a.e. dimension of vertical projections of a set of
dimension s:

  bound_bdfm     s on [0,1), 1 on [1,3), 2s-5 on [3,4]
  bound_fh       1 + (s-1)(s-2)/(32 s^2) for s >= 2
  bound_theorem  s/2 on (2, 5/2], s(s+2)/(4s-1) on (5/2, 4]

bound_theorem equals s - kappa(s) where kappa(s) is the critical exponent
max{s/2, 3(s-1)/(4-1/s)}, and strictly improves on the other two exactly
for s in (2, (12+sqrt(109))/7), the right endpoint being about 3.2058.

z_delta_fraction measures, at scale delta, the nu-mass of centers y whose
projected delta-ball is heavy (pushforward mass >= delta^s) on an angle
fraction of at least delta^eta: the empirical hypothesis under which the
a.e. lower bound s is guaranteed.  Grid fractions stand in for a.e.
statements throughout and are reported with their grid size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import koranyi_dist, vertical_chart, vertical_projection
from .dimension import chart_box_dimension
from .estimates import DimensionEstimate
from .measures import WeightedCloud
from .parallel import ordered_map

__all__ = [
    "bound_bdfm",
    "bound_fh",
    "bound_theorem",
    "kappa",
    "eta_choice",
    "alpha_exponent",
    "improvement_interval",
    "pushforward_ball_mass",
    "ZDeltaReport",
    "z_delta_fraction",
    "SweepResult",
    "sweep_dimension",
]


def _check_domain(s, lo, hi, lo_open=True):
    s = np.asarray(s, dtype=float)
    inside = (s > lo) if lo_open else (s >= lo)
    inside &= s <= hi
    if not np.all(inside):
        op = "(" if lo_open else "["
        raise ValueError(f"argument must lie in {op}{lo}, {hi}], got {s[~inside].flat[0]}")
    return s


def bound_bdfm(s):
    """Piecewise baseline bound: s on [0,1), 1 on [1,3), 2s-5 on [3,4]."""
    s = _check_domain(s, 0.0, 4.0, lo_open=False)
    out = np.where(s < 1.0, s, np.where(s < 3.0, 1.0, 2.0 * s - 5.0))
    return float(out) if out.ndim == 0 else out


def bound_fh(s):
    """Energy-method bound 1 + (s-1)(s-2)/(32 s^2) for s >= 2."""
    s = np.asarray(s, dtype=float)
    if not np.all(s >= 2.0):
        raise ValueError("bound_fh needs s >= 2")
    out = 1.0 + (s - 1.0) * (s - 2.0) / (32.0 * s * s)
    return float(out) if out.ndim == 0 else out


def bound_theorem(s):
    """Improved bound: s/2 on (2, 5/2], s(s+2)/(4s-1) on (5/2, 4]."""
    s = _check_domain(s, 2.0, 4.0)
    out = np.where(s <= 2.5, s / 2.0, s * (s + 2.0) / (4.0 * s - 1.0))
    return float(out) if out.ndim == 0 else out


def kappa(s):
    """Critical exponent max{s/2, 3(s-1)/(4 - 1/s)}; branches cross at s=5/2."""
    s = _check_domain(s, 2.0, 4.0)
    out = np.maximum(s / 2.0, 3.0 * (s - 1.0) / (4.0 - 1.0 / s))
    return float(out) if out.ndim == 0 else out


def eta_choice(s: float, kappa_value: float) -> float:
    """eta = 1e-4 * min{kappa - s/2, kappa - 3(s-1)/(4-1/s)}.

    Positive only when kappa strictly exceeds both branches; a nonpositive
    margin is rejected.
    """
    s = float(s)
    margin = min(kappa_value - s / 2.0, kappa_value - 3.0 * (s - 1.0) / (4.0 - 1.0 / s))
    if not margin > 0:
        raise ValueError(
            f"kappa={kappa_value} does not exceed both branches at s={s}; eta would be nonpositive"
        )
    return 1e-4 * margin


def alpha_exponent(s: float, kappa_value: float, eta: float) -> float:
    """alpha = (s - kappa + 1000 eta)/s, required to lie in (0, 1)."""
    if not kappa_value < s:
        raise ValueError("kappa must be smaller than s")
    a = (s - kappa_value + 1000.0 * eta) / s
    if not 0.0 < a < 1.0:
        raise ValueError(f"alpha={a} outside (0,1)")
    return a


def improvement_interval() -> tuple[float, float]:
    """Dimension range where bound_theorem beats both older bounds.

    The right endpoint solves s(s+2)/(4s-1) = 2s-5, i.e. 7s^2-24s+5 = 0,
    giving (12+sqrt(109))/7, roughly 3.2058.
    """
    return 2.0, (12.0 + math.sqrt(109.0)) / 7.0


def pushforward_ball_mass(cloud: WeightedCloud, theta: float, y, delta: float) -> float:
    """Mass of the cloud whose projection at theta lands within delta of y's."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    proj = vertical_projection(theta, cloud.points)
    target = vertical_projection(theta, np.asarray(y, dtype=float))
    d = koranyi_dist(proj, target)
    return float(cloud.weights[d <= delta].sum())


@dataclass
class ZDeltaReport:
    """Empirical heavy-projection statistics at one scale.

    bad_theta_fraction[i] is the fraction of grid angles at which the
    projected delta-ball around sample point i carries mass >= delta^s;
    bad_point_mass estimates the nu-mass of points whose fraction reaches
    delta^eta.
    """

    delta: float
    s: float
    eta: float
    bad_theta_fraction: np.ndarray
    bad_point_mass: float
    theta_grid: int
    sample_points: int


def _chart_masses_at_theta(cloud, theta, centers_idx, delta):
    """Pushforward delta-ball masses for many centers at one angle."""
    chart = vertical_chart(theta, vertical_projection(theta, cloud.points))
    order = np.argsort(chart[:, 0], kind="stable")
    lam1 = chart[order, 0]
    lam2 = chart[order, 1]
    w = cloud.weights[order]
    pos = np.searchsorted(lam1, chart[centers_idx, 0])
    out = np.empty(centers_idx.size)
    for k, (ci, p) in enumerate(zip(centers_idx, pos)):
        lo = np.searchsorted(lam1, chart[ci, 0] - delta, side="left")
        hi = np.searchsorted(lam1, chart[ci, 0] + delta, side="right")
        d1 = lam1[lo:hi] - chart[ci, 0]
        d2 = lam2[lo:hi] - chart[ci, 1]
        d1sq = d1 * d1
        inside = d1sq * d1sq + d2 * d2 <= delta**4
        out[k] = float(w[lo:hi][inside].sum())
    return out


def z_delta_fraction(
    cloud: WeightedCloud,
    delta: float,
    s: float,
    eta: float,
    theta_grid: int = 64,
    sample_points: int = 256,
    seed: int = 0,
    threads: int | None = None,
) -> ZDeltaReport:
    """Fraction of angles with heavy projected balls, per sampled point.

    Centers are drawn from the cloud, so bad_point_mass is the empirical
    nu-mass of {y : |{theta : mass >= delta^s}| / grid >= delta^eta}.
    """
    if theta_grid < 64:
        raise ValueError("theta grid must have at least 64 angles")
    if not (delta > 0 and s >= 0 and eta > 0):
        raise ValueError("delta and eta must be positive and s nonnegative")
    rng = np.random.default_rng(int(seed))
    p = cloud.weights / cloud.total_mass
    centers_idx = rng.choice(len(cloud), size=int(sample_points), p=p)
    thetas = np.arange(theta_grid) * np.pi / theta_grid
    rows = ordered_map(
        lambda th: _chart_masses_at_theta(cloud, th, centers_idx, delta),
        thetas,
        threads,
    )
    masses = np.stack(rows, axis=1)  # (samples, grid)
    heavy = masses >= delta**s
    frac = heavy.mean(axis=1)
    bad = frac >= delta**eta
    return ZDeltaReport(
        delta=float(delta),
        s=float(s),
        eta=float(eta),
        bad_theta_fraction=frac,
        bad_point_mass=float(bad.mean()),
        theta_grid=int(theta_grid),
        sample_points=int(sample_points),
    )


@dataclass
class SweepResult:
    """Per-angle chart box-dimension profile with bound-curve context."""

    thetas: np.ndarray
    estimates: list[DimensionEstimate]
    nominal_dimension: float | None
    bound_theorem: float | None = None
    bound_bdfm: float | None = None
    bound_fh: float | None = None
    scales: np.ndarray = field(default=None, repr=False)

    @property
    def slopes(self) -> np.ndarray:
        return np.array([e.slope for e in self.estimates])


def sweep_dimension(
    cloud: WeightedCloud,
    theta_grid: int,
    scales,
    nominal_dimension: float | None = None,
    threads: int | None = None,
) -> SweepResult:
    """Chart box dimension of the projected cloud at each grid angle."""
    if theta_grid < 16:
        raise ValueError("theta grid must have at least 16 angles")
    scales = np.asarray(scales, dtype=float)
    thetas = np.arange(theta_grid) * np.pi / theta_grid
    s0 = nominal_dimension if nominal_dimension is not None else cloud.nominal_dimension

    def one(theta):
        chart = vertical_chart(theta, vertical_projection(theta, cloud.points))
        return chart_box_dimension(chart, scales)

    estimates = ordered_map(one, thetas, threads)
    result = SweepResult(thetas=thetas, estimates=estimates, nominal_dimension=s0, scales=scales)
    if s0 is not None:
        if 2.0 < s0 <= 4.0:
            result.bound_theorem = bound_theorem(s0)
        if 0.0 <= s0 <= 4.0:
            result.bound_bdfm = bound_bdfm(s0)
        if s0 >= 2.0:
            result.bound_fh = bound_fh(s0)
    return result
