"""Log-log regression record shared by the dimension and measure estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

__all__ = ["DimensionEstimate", "fit_loglog"]


@dataclass
class DimensionEstimate:
    """Result of a least-squares fit of log(observable) against log(scale).

    window is the (min, max) of the scales that actually entered the fit;
    degenerate marks fits with no usable variation (e.g. a single atom,
    whose ball mass is constant in the radius).
    """

    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    degenerate: bool = False
    n_points: int = field(default=0, repr=False)

    def __str__(self):
        lo, hi = self.window
        tag = " (degenerate)" if self.degenerate else ""
        return (
            f"slope={self.slope:.4f} r2={self.r_squared:.4f} "
            f"window=[{lo:.3g}, {hi:.3g}]{tag}"
        )


def fit_loglog(scales, values, x_transform=None) -> DimensionEstimate:
    """Fit log(values) ~ slope * log(x) + intercept.

    x defaults to the scales themselves; pass x_transform (e.g. lambda s: 1/s
    for box counting) to regress against a function of the scale.  Zero or
    negative values are dropped; fewer than two surviving points, or a flat
    response, yields a degenerate estimate with slope 0.
    """
    scales = np.asarray(scales, dtype=float)
    values = np.asarray(values, dtype=float)
    if scales.shape != values.shape or scales.ndim != 1:
        raise ValueError("scales and values must be 1-d arrays of equal length")
    keep = values > 0
    if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
        raise ValueError("scales must be finite and positive")
    xs = scales[keep]
    ys = values[keep]
    if xs.size == 0:
        return DimensionEstimate(0.0, 0.0, 0.0, (float("nan"), float("nan")), True, 0)
    window = (float(xs.min()), float(xs.max()))
    if xs.size < 2 or np.all(ys == ys[0]):
        return DimensionEstimate(0.0, float(np.log(ys[0])), 0.0, window, True, int(xs.size))
    x = np.log(xs if x_transform is None else x_transform(xs))
    y = np.log(ys)
    fit = linregress(x, y)
    r2 = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 0.0
    return DimensionEstimate(float(fit.slope), float(fit.intercept), r2, window, False, int(xs.size))
