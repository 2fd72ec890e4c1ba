"""Exact arithmetic for the first Heisenberg group.

The group is R^3 = C x R with the noncommutative product
(z,t)*(zeta,tau) = (z+zeta, t+tau-2 z^zeta), where ^ is the planar wedge
product.  Distances are measured in the Koranyi metric
d((z,t),(zeta,tau)) = (|z-zeta|^4 + |t-tau-2 z^zeta|^2)^(1/4), which is
left invariant and scales linearly under the anisotropic dilations
(z,t) -> (r z, r^2 t).

All operations are pure functions over numpy arrays of shape (..., 3)
(points) or (..., 2) (planar vectors) and broadcast in the usual way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HPoint",
    "hpoint",
    "wedge",
    "group_mul",
    "group_inv",
    "koranyi_norm",
    "koranyi_dist",
    "second_component",
    "dilate",
    "rotate",
    "reduce_angle",
    "angle_circle_dist",
    "unit_vector",
    "perp_vector",
    "proj_line",
    "proj_perp",
    "vertical_projection",
    "horizontal_projection",
    "vertical_chart",
    "chart_embed",
    "chart_dist",
    "projected_distance",
    "annulus_contains",
]


@dataclass(frozen=True)
class HPoint:
    """A point (x, y, t) of the Heisenberg group; coordinates must be finite."""

    x: float
    y: float
    t: float

    def __post_init__(self):
        for name in ("x", "y", "t"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"HPoint coordinate {name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.t], dtype=dtype or float)

    @property
    def z(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @classmethod
    def from_array(cls, a) -> "HPoint":
        a = np.asarray(a, dtype=float)
        if a.shape != (3,):
            raise ValueError(f"expected shape (3,), got {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]))


def hpoint(x: float, y: float, t: float) -> np.ndarray:
    """Validated point constructor returning a plain (3,) array."""
    return np.asarray(HPoint(x, y, t))


def _pts(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


def _fourth_root(a: np.ndarray) -> np.ndarray:
    # sqrt(sqrt(.)) instead of power(., 0.25): avoids pow() platform drift.
    return np.sqrt(np.sqrt(a))


def wedge(u, v) -> np.ndarray:
    """Planar wedge product (x1,y1)^(x2,y2) = x1*y2 - x2*y1."""
    u = _pts(u)
    v = _pts(v)
    return u[..., 0] * v[..., 1] - v[..., 0] * u[..., 1]


def group_mul(v, w) -> np.ndarray:
    """Group product (z,t)*(zeta,tau) = (z+zeta, t+tau-2 z^zeta)."""
    v = _pts(v)
    w = _pts(w)
    out = np.empty(np.broadcast_shapes(v.shape, w.shape), dtype=float)
    out[..., :2] = v[..., :2] + w[..., :2]
    out[..., 2] = v[..., 2] + w[..., 2] - 2.0 * wedge(v[..., :2], w[..., :2])
    return out


def group_inv(v) -> np.ndarray:
    """Group inverse (z,t)^(-1) = (-z,-t)."""
    return -_pts(v)


def koranyi_norm(v) -> np.ndarray:
    """Koranyi gauge ||(z,t)|| = (|z|^4 + t^2)^(1/4)."""
    v = _pts(v)
    zz = v[..., 0] ** 2 + v[..., 1] ** 2
    return _fourth_root(zz * zz + v[..., 2] ** 2)


def second_component(v, w) -> np.ndarray:
    """Signed second component t - tau - 2 z^zeta of the Koranyi distance.

    This quantity does not depend on the projection angle, which is what
    makes near-collisions of vertical projections rigid.
    """
    v = _pts(v)
    w = _pts(w)
    return v[..., 2] - w[..., 2] - 2.0 * wedge(v[..., :2], w[..., :2])


def koranyi_dist(v, w) -> np.ndarray:
    """Left-invariant Koranyi distance between points of the group."""
    v = _pts(v)
    w = _pts(w)
    dx = v[..., 0] - w[..., 0]
    dy = v[..., 1] - w[..., 1]
    zz = dx * dx + dy * dy
    return _fourth_root(zz * zz + second_component(v, w) ** 2)


def dilate(r: float, v) -> np.ndarray:
    """Anisotropic dilation (z,t) -> (r z, r^2 t); scales the metric by r."""
    r = float(r)
    if not r > 0:
        raise ValueError(f"dilation ratio must be positive, got {r}")
    v = _pts(v)
    out = v.copy()
    out[..., :2] *= r
    out[..., 2] *= r * r
    return out


def rotate(phi: float, v) -> np.ndarray:
    """Rotation (z,t) -> (e^{i phi} z, t); an isometry of the Koranyi metric."""
    v = _pts(v)
    c, s = np.cos(phi), np.sin(phi)
    out = np.empty_like(v)
    out[..., 0] = c * v[..., 0] - s * v[..., 1]
    out[..., 1] = s * v[..., 0] + c * v[..., 1]
    out[..., 2] = v[..., 2]
    return out


def reduce_angle(theta) -> np.ndarray:
    """Reduce an angle to [0, pi); horizontal lines only matter mod pi."""
    return np.mod(theta, np.pi)


def angle_circle_dist(a, b) -> np.ndarray:
    """Distance between angles on the circle [0, pi) mod pi."""
    d = np.abs(reduce_angle(a) - reduce_angle(b))
    return np.minimum(d, np.pi - d)


def unit_vector(theta) -> np.ndarray:
    """e^{i theta} = (cos theta, sin theta), direction of the line V_theta."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def perp_vector(theta) -> np.ndarray:
    """i e^{i theta} = (-sin theta, cos theta), direction of V_theta-perp."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


def proj_line(theta, z) -> np.ndarray:
    """Orthogonal projection of a planar vector onto the line V_theta."""
    z = _pts(z)
    e = unit_vector(theta)
    coeff = z[..., 0] * e[..., 0] + z[..., 1] * e[..., 1]
    return coeff[..., None] * e


def proj_perp(theta, z) -> np.ndarray:
    """Orthogonal projection of a planar vector onto the line V_theta-perp."""
    z = _pts(z)
    ie = perp_vector(theta)
    coeff = z[..., 0] * ie[..., 0] + z[..., 1] * ie[..., 1]
    return coeff[..., None] * ie


def horizontal_projection(theta, v) -> np.ndarray:
    """Horizontal projection (z,t) -> (proj_line(z), 0) onto the subgroup V_theta."""
    v = _pts(v)
    zp = proj_line(theta, v[..., :2])
    out = np.zeros(zp.shape[:-1] + (3,), dtype=float)
    out[..., :2] = zp
    return out


def vertical_projection(theta, v) -> np.ndarray:
    """Vertical projection onto the plane subgroup spanned by i e^{i theta} and t.

    P(z,t) = (proj_perp(z), t - 2 proj_line(z)^proj_perp(z)); it is the unique
    left factor in the decomposition v = P(v) * horizontal_projection(v).
    """
    v = _pts(v)
    z = v[..., :2]
    zline = proj_line(theta, z)
    zperp = proj_perp(theta, z)
    out = np.empty(np.broadcast_shapes(zperp.shape[:-1], v[..., 2].shape) + (3,), dtype=float)
    out[..., :2] = zperp
    out[..., 2] = v[..., 2] - 2.0 * wedge(zline, zperp)
    return out


def vertical_chart(theta, p, tol: float = 1e-8) -> np.ndarray:
    """Chart coordinates (lam1, lam2) of points in the vertical plane at theta.

    The embedding is (lam1, lam2) -> (lam1 * i e^{i theta}, lam2).  Inputs
    whose planar part has a component along e^{i theta} larger than
    tol*(1+|z|) are rejected: they are not in the plane.
    """
    p = _pts(p)
    z = p[..., :2]
    e = unit_vector(theta)
    ie = perp_vector(theta)
    along = z[..., 0] * e[..., 0] + z[..., 1] * e[..., 1]
    norm = np.hypot(z[..., 0], z[..., 1])
    bad = np.abs(along) >= tol * (1.0 + norm)
    if np.any(bad):
        worst = float(np.max(np.abs(along)))
        raise ValueError(
            f"point not in the vertical plane at theta: residual {worst:.3e} exceeds tolerance"
        )
    lam1 = z[..., 0] * ie[..., 0] + z[..., 1] * ie[..., 1]
    return np.stack([lam1, p[..., 2]], axis=-1)


def chart_embed(theta, lam) -> np.ndarray:
    """Inverse of vertical_chart: (lam1, lam2) -> (lam1 * i e^{i theta}, lam2)."""
    lam = _pts(lam)
    ie = perp_vector(theta)
    out = np.empty(np.broadcast_shapes(lam.shape[:-1], np.shape(theta)) + (3,), dtype=float)
    out[..., 0] = lam[..., 0] * ie[..., 0]
    out[..., 1] = lam[..., 0] * ie[..., 1]
    out[..., 2] = lam[..., 1]
    return out


def chart_dist(a, b) -> np.ndarray:
    """Parabolic metric (|d lam1|^4 + |d lam2|^2)^(1/4) on chart coordinates.

    Equals the Koranyi distance of the embedded points: planar parts of a
    vertical plane are parallel, so the wedge term vanishes.
    """
    a = _pts(a)
    b = _pts(b)
    d1 = a[..., 0] - b[..., 0]
    d2 = a[..., 1] - b[..., 1]
    d1sq = d1 * d1
    return _fourth_root(d1sq * d1sq + d2 * d2)


def projected_distance(theta, v, w) -> np.ndarray:
    """Koranyi distance between the vertical projections of v and w at theta.

    Closed form: with u2 = <z-zeta, i e^{i theta}>, q1 = <z+zeta, e^{i theta}>
    and T = t - tau - 2 z^zeta,

        d^4 = u2^4 + (T - 2 q1 u2)^2.

    Broadcasts over both theta and point arrays, so a dense theta scan of a
    single pair costs one vector pass.
    """
    theta = np.asarray(theta, dtype=float)
    v = _pts(v)
    w = _pts(w)
    dz = v[..., :2] - w[..., :2]
    sz = v[..., :2] + w[..., :2]
    T = second_component(v, w)
    c, s = np.cos(theta), np.sin(theta)
    u2 = -dz[..., 0] * s + dz[..., 1] * c
    q1 = sz[..., 0] * c + sz[..., 1] * s
    u2sq = u2 * u2
    return _fourth_root(u2sq * u2sq + (T - 2.0 * q1 * u2) ** 2)


def annulus_contains(center, r: float, R: float, w) -> np.ndarray:
    """True where w lies in the closed Koranyi annulus r <= d(center, w) <= R."""
    r = float(r)
    R = float(R)
    if not 0 <= r <= R:
        raise ValueError(f"annulus radii must satisfy 0 <= r <= R, got r={r}, R={R}")
    d = koranyi_dist(center, w)
    return (r <= d) & (d <= R)
