"""Balls, heatballs, modified heatballs and the domains they live in.

All specs are immutable. Heatball centres are points ``(x, t)`` in R^{n+1}
with time as the last coordinate; a heatball only reaches backwards in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gamma

FOUR_PI = 4.0 * math.pi


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


def unit_sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (two points when n = 1)."""
    return n * unit_ball_volume(n)


def heat_kernel(y, s, n: int):
    """Fundamental solution (4 pi s)^{-n/2} exp(-|y|^2 / 4s).

    ``y`` has shape ``(..., n)`` (or is a scalar when n = 1), ``s`` broadcasts
    against the leading shape.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("heat kernel needs s > 0")
    y = np.asarray(y, dtype=float)
    if n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        sq = y**2
    else:
        sq = np.sum(y**2, axis=-1)
    return (FOUR_PI * s) ** (-n / 2) * np.exp(-sq / (4.0 * s))


def _log_term(depth, r):
    return np.log(r * r / (FOUR_PI * depth))


def heatball_slice_radius(depth, r: float, n: int):
    """Spatial radius of the heatball slice at ``depth = t - s``.

    Zero (empty slice) once ``depth >= r^2 / 4 pi``.
    """
    depth = np.asarray(depth, dtype=float)
    if np.any(depth <= 0):
        raise ValueError("depth must be positive")
    if r <= 0:
        raise ValueError("radius must be positive")
    sq = 2.0 * n * depth * _log_term(depth, r)
    out = np.sqrt(np.clip(sq, 0.0, None))
    return float(out) if out.ndim == 0 else out


def modified_slice_radius(y, depth, r: float, n: int, m: int):
    """Radius A of the eta-ball integrated out at ``(y, depth)``.

    ``A^2 = 2 depth (m+n) log(r^2 / 4 pi depth) - |y|^2``; zero when negative.
    """
    depth = np.asarray(depth, dtype=float)
    if np.any(depth <= 0):
        raise ValueError("depth must be positive")
    if r <= 0:
        raise ValueError("radius must be positive")
    y = np.asarray(y, dtype=float)
    if n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        ysq = y**2
    else:
        ysq = np.sum(y**2, axis=-1)
    sq = 2.0 * depth * (m + n) * _log_term(depth, r) - ysq
    out = np.sqrt(np.clip(sq, 0.0, None))
    return float(out) if out.ndim == 0 else out


def max_heatball_depth(r: float) -> float:
    return r * r / FOUR_PI


def max_slice_radius(r: float, dim: int) -> float:
    """Largest slice radius of a dim-dimensional heatball (attained at depth r^2/(4 pi e))."""
    return r * math.sqrt(dim / (2.0 * math.pi * math.e))


@dataclass(frozen=True)
class BallSpec:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius**self.dim

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.sum((p - np.asarray(self.center)) ** 2, axis=1) < self.radius**2


@dataclass(frozen=True)
class HeatballSpec:
    """Heatball E(x, t; r); ``center`` is ``(x_1, ..., x_n, t)``."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.radius <= 0:
            raise ValueError("heatball radius must be positive")
        if len(self.center) < 2:
            raise ValueError("heatball centre needs at least one space and one time coordinate")

    @property
    def spatial_dim(self) -> int:
        return len(self.center) - 1

    def contains(self, points) -> np.ndarray:
        """Membership by the kernel inequality; the isolated centre is ignored."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        c = np.asarray(self.center)
        depth = c[-1] - p[:, -1]
        out = np.zeros(len(p), dtype=bool)
        live = depth > 0
        if np.any(live):
            k = heat_kernel(c[:-1] - p[live, :-1], depth[live], self.spatial_dim)
            out[live] = k >= self.radius ** (-self.spatial_dim)
        return out


@dataclass(frozen=True)
class ModifiedHeatballSpec:
    """(n, m)-modified heatball E_m(x, t; r)."""

    center: tuple
    radius: float
    extra_dim: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.radius <= 0:
            raise ValueError("heatball radius must be positive")
        if self.extra_dim < 1:
            raise ValueError("extra_dim must be >= 1")

    @property
    def spatial_dim(self) -> int:
        return len(self.center) - 1

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        c = np.asarray(self.center)
        depth = c[-1] - p[:, -1]
        out = np.zeros(len(p), dtype=bool)
        live = (depth > 0) & (depth < max_heatball_depth(self.radius))
        if np.any(live):
            d = depth[live]
            ysq = np.sum((c[:-1] - p[live, :-1]) ** 2, axis=1)
            n, m = self.spatial_dim, self.extra_dim
            out[live] = ysq <= 2.0 * d * (m + n) * _log_term(d, self.radius)
        return out


def _slice_volume_integral(dim_ball: int, dim_radius: int, quad) -> float:
    from .quadrature import depth_rule

    # graded rule in depth on (0, 1/4pi): integrand |B_1^{dim_ball}| rho_{dim_radius}(s)^{dim_ball}
    s, w = depth_rule(1.0, quad)
    rho = heatball_slice_radius(s, 1.0, dim_radius)
    return float(np.sum(w * unit_ball_volume(dim_ball) * rho**dim_ball))


def _refined_volume(dim_ball: int, dim_radius: int, quad) -> float:
    from .quadrature import QuadratureError

    value = _slice_volume_integral(dim_ball, dim_radius, quad)
    for _ in range(quad.max_refinements):
        quad = quad.refined()
        new = _slice_volume_integral(dim_ball, dim_radius, quad)
        if abs(new - value) <= quad.target_rel_tol * abs(new):
            return new
        value = new
    if quad.max_refinements == 0:
        return value
    raise QuadratureError(f"heatball volume did not settle to rel tol {quad.target_rel_tol}")


@lru_cache(maxsize=None)
def _unit_heatball_volume(n: int, quad) -> float:
    return _refined_volume(n, n, quad)


@lru_cache(maxsize=None)
def _unit_modified_volume(n: int, m: int, quad) -> float:
    return _refined_volume(n, n + m, quad)


def heatball_volume(spec: HeatballSpec, quad=None) -> float:
    """|E(x, t; r)| = r^{n+2} |E(1)|, with |E(1)| from a graded slice integral."""
    from .quadrature import QuadratureConfig

    quad = quad or QuadratureConfig()
    n = spec.spatial_dim
    return spec.radius ** (n + 2) * _unit_heatball_volume(n, quad)


def unit_heatball_volume(n: int, quad=None) -> float:
    from .quadrature import QuadratureConfig

    return _unit_heatball_volume(n, quad or QuadratureConfig())


def modified_heatball_volume(spec: ModifiedHeatballSpec, quad=None) -> float:
    """|E_m(x, t; r)|: projection volume, slice radius taken in m+n dimensions."""
    from .quadrature import QuadratureConfig

    quad = quad or QuadratureConfig()
    n = spec.spatial_dim
    return spec.radius ** (n + 2) * _unit_modified_volume(n, spec.extra_dim, quad)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, Euclidean ball, linear image of a box, or empty.

    Use the classmethod constructors rather than the raw fields.
    """

    shape: str
    dim: int
    lows: tuple = ()
    highs: tuple = ()
    center: tuple = ()
    radius: float = 0.0
    matrix: tuple = field(default=())

    @classmethod
    def box(cls, lows, highs) -> "Domain":
        lows = tuple(float(v) for v in np.atleast_1d(lows))
        highs = tuple(float(v) for v in np.atleast_1d(highs))
        if len(lows) != len(highs):
            raise ValueError("box bounds disagree in dimension")
        if any(h <= l for l, h in zip(lows, highs)):
            raise ValueError("box needs nonempty interior")
        return cls("box", len(lows), lows=lows, highs=highs)

    @classmethod
    def unit_box(cls, dim: int) -> "Domain":
        return cls.box([0.0] * dim, [1.0] * dim)

    @classmethod
    def ball(cls, center, radius: float) -> "Domain":
        center = tuple(float(v) for v in np.atleast_1d(center))
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        return cls("ball", len(center), center=center, radius=float(radius))

    @classmethod
    def unit_ball(cls, dim: int) -> "Domain":
        return cls.ball([0.0] * dim, 1.0)

    @classmethod
    def linear_image(cls, box: "Domain", matrix) -> "Domain":
        """{A x : x in box} for an invertible matrix A."""
        a = np.asarray(matrix, dtype=float)
        if box.shape != "box":
            raise ValueError("linear_image expects a box")
        if a.shape != (box.dim, box.dim):
            raise ValueError("matrix shape does not match the box dimension")
        if abs(np.linalg.det(a)) < 1e-14:
            raise ValueError("singular linear map")
        if np.allclose(a, np.diag(np.diag(a))) and np.all(np.diag(a) > 0):
            d = np.diag(a)
            return cls.box(np.asarray(box.lows) * d, np.asarray(box.highs) * d)
        return cls(
            "parallelepiped",
            box.dim,
            lows=box.lows,
            highs=box.highs,
            matrix=tuple(map(tuple, a)),
        )

    @classmethod
    def empty(cls, dim: int) -> "Domain":
        return cls("empty", dim)

    @property
    def is_empty(self) -> bool:
        return self.shape == "empty"

    @property
    def measure(self) -> float:
        if self.shape == "box":
            return float(np.prod(np.subtract(self.highs, self.lows)))
        if self.shape == "ball":
            return unit_ball_volume(self.dim) * self.radius**self.dim
        if self.shape == "parallelepiped":
            box = float(np.prod(np.subtract(self.highs, self.lows)))
            return abs(float(np.linalg.det(np.asarray(self.matrix)))) * box
        return 0.0

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == "box":
            return np.asarray(self.lows), np.asarray(self.highs)
        if self.shape == "ball":
            c = np.asarray(self.center)
            return c - self.radius, c + self.radius
        if self.shape == "parallelepiped":
            corners = _box_corners(self.lows, self.highs) @ np.asarray(self.matrix).T
            return corners.min(axis=0), corners.max(axis=0)
        raise ValueError("empty domain has no bounding box")

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape == "box":
            return np.all((p >= self.lows) & (p <= self.highs), axis=1)
        if self.shape == "ball":
            return np.sum((p - self.center) ** 2, axis=1) <= self.radius**2
        if self.shape == "parallelepiped":
            pre = np.linalg.solve(np.asarray(self.matrix), p.T).T
            return np.all((pre >= self.lows) & (pre <= self.highs), axis=1)
        return np.zeros(len(p), dtype=bool)

    def describe(self) -> dict:
        out = {"shape": self.shape, "dim": self.dim, "measure": self.measure}
        if self.shape in ("box", "parallelepiped"):
            out.update(lows=list(self.lows), highs=list(self.highs))
        if self.shape == "ball":
            out.update(center=list(self.center), radius=self.radius)
        if self.shape == "parallelepiped":
            out["matrix"] = [list(row) for row in self.matrix]
        return out


def _box_corners(lows, highs) -> np.ndarray:
    d = len(lows)
    bits = (np.arange(2**d)[:, None] >> np.arange(d)) & 1
    return np.where(bits == 1, highs, lows)


def shrink_domain(dom: Domain, delta: float) -> Domain:
    """Points at distance >= delta from the boundary.

    Boxes shrink per axis, which for a box is exactly the Euclidean
    inner parallel set; balls lose delta in radius.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if dom.shape == "empty":
        return dom
    if dom.shape == "box":
        lows = np.asarray(dom.lows) + delta
        highs = np.asarray(dom.highs) - delta
        if np.any(highs <= lows):
            return Domain.empty(dom.dim)
        return Domain.box(lows, highs)
    if dom.shape == "ball":
        if dom.radius <= delta:
            return Domain.empty(dom.dim)
        return Domain.ball(dom.center, dom.radius - delta)
    raise ValueError(f"cannot shrink a {dom.shape}")


def modified_heatball_halfwidth(R: float, n: int, m: int) -> float:
    return max_slice_radius(R, n + m)


def shrink_domain_heat(dom: Domain, R: float, n: int, m: int) -> Domain:
    """Centres (x, t) whose modified heatball E_m(x, t; R) stays inside ``dom``.

    Uses the bounding box of E_m: spatial half-width R sqrt((m+n)/(2 pi e))
    and time depth R^2/4pi below t. For a ball domain the result is the
    largest concentric-in-space ball that keeps the whole bounding box
    inside, which is a subset of the exact retained set.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if dom.dim != n + 1:
        raise ValueError(f"space-time domain must have dimension n+1 = {n + 1}")
    if dom.shape == "empty":
        return dom
    w = modified_heatball_halfwidth(R, n, m)
    depth = max_heatball_depth(R)
    if dom.shape == "box":
        lows = np.asarray(dom.lows, dtype=float).copy()
        highs = np.asarray(dom.highs, dtype=float).copy()
        lows[:-1] += w
        highs[:-1] -= w
        lows[-1] += depth
        if np.any(highs <= lows):
            return Domain.empty(dom.dim)
        return Domain.box(lows, highs)
    if dom.shape == "ball":
        half_diag = math.sqrt(n * w * w + (depth / 2) ** 2)
        radius = dom.radius - half_diag
        if radius <= 0:
            return Domain.empty(dom.dim)
        center = np.asarray(dom.center, dtype=float).copy()
        center[-1] += depth / 2
        return Domain.ball(center, radius)
    raise ValueError(f"cannot shrink a {dom.shape}")
