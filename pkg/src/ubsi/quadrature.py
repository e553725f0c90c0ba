"""Deterministic cubature over balls, heatballs and modified heatballs.

Heatballs are integrated slice by slice in depth ``d = t - s``. The depth
interval (0, r^2/4pi) is pulled back to (0, 1) through a sigmoidal map
that flattens both ends, because the slice radius behaves like
sqrt(d log(1/d)) at the tip and like sqrt(r^2/4pi - d) at the base.
Each slice is an n-ball done as Gauss-Jacobi in radius times a product
rule on the sphere.

All rules are built on the unit object and rescaled, so the result is a
smooth function of the radius for a fixed config (this matters for the
finite-difference checks in :mod:`ubsi.averages`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .geometry import (
    FOUR_PI,
    BallSpec,
    HeatballSpec,
    ModifiedHeatballSpec,
    heatball_slice_radius,
    max_heatball_depth,
    unit_ball_volume,
)


class QuadratureError(RuntimeError):
    """Raised when refinement does not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Resolution knobs shared by every integrator.

    ``slice_count`` depth panels with ``slice_points`` Gauss nodes each;
    ``radial_points`` Gauss-Jacobi nodes in radius; ``angular_points``
    controls the sphere rule (exact for spherical polynomials of degree
    < angular_points). ``max_refinements = 0`` means a single fixed rule.
    """

    slice_count: int = 24
    slice_points: int = 8
    radial_points: int = 8
    angular_points: int = 16
    grading_exponent: float = 8.0
    target_rel_tol: float = 1e-9
    max_refinements: int = 2

    def __post_init__(self):
        if min(self.slice_count, self.slice_points, self.radial_points, self.angular_points) < 1:
            raise ValueError("quadrature counts must be positive")
        if self.grading_exponent < 1:
            raise ValueError("grading_exponent must be >= 1")
        if self.target_rel_tol <= 0:
            raise ValueError("target_rel_tol must be positive")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be >= 0")

    def refined(self) -> "QuadratureConfig":
        # depth is the only direction with endpoint singularities; the radial
        # and angular rules are spectral for smooth slices
        return replace(
            self,
            slice_count=2 * self.slice_count,
            radial_points=self.radial_points + 4,
            angular_points=self.angular_points + 8,
        )

    def fixed(self) -> "QuadratureConfig":
        return replace(self, max_refinements=0)


DEFAULT_QUAD = QuadratureConfig()

# ---------------------------------------------------------------- 1-D rules


def _grading(tau, gamma):
    a = tau**gamma
    b = (1.0 - tau) ** gamma
    val = a / (a + b)
    jac = gamma * tau ** (gamma - 1) * (1.0 - tau) ** (gamma - 1) / (a + b) ** 2
    return val, jac


@lru_cache(maxsize=None)
def _unit_depth_rule(panels: int, points: int, gamma: float):
    x, w = roots_legendre(points)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    tau = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    val, jac = _grading(tau, gamma)
    keep = (val > 0) & (val < 1)
    return val[keep], (wt * jac)[keep]


def depth_rule(r: float, quad: QuadratureConfig = DEFAULT_QUAD):
    """Nodes and weights for integrals over depth in (0, r^2/4pi)."""
    top = max_heatball_depth(r)
    val, w = _unit_depth_rule(quad.slice_count, quad.slice_points, float(quad.grading_exponent))
    return top * val, top * w


@lru_cache(maxsize=None)
def _jacobi(points: int, alpha: float, beta: float):
    x, w = roots_jacobi(points, alpha, beta)
    return x, w


def radial_rule(points: int, dim: int, edge_power: float = 0.0):
    """Unit-radius rule for int_0^1 rho^{dim-1} (1-rho)^{edge_power} g(rho) d rho.

    Returns ``(rho, weights)``; weights already contain rho^{dim-1} and the
    edge factor, so only g is evaluated at the nodes.
    """
    x, w = _jacobi(points, float(edge_power), float(dim - 1))
    rho = 0.5 * (1.0 + x)
    return rho, w * 0.5 ** (dim + edge_power)


@lru_cache(maxsize=None)
def sphere_rule(dim: int, angular_points: int):
    """Product rule on the unit sphere S^{dim-1} in R^dim.

    dim = 1: the two points +-1. dim = 2: equispaced trapezoid rule.
    Higher: Gauss-Gegenbauer in the first coordinate times the rule on
    the lower sphere. Weights sum to the sphere area.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        k = max(angular_points, 3)
        theta = 2.0 * math.pi * (np.arange(k) + 0.5) / k
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        return pts, np.full(k, 2.0 * math.pi / k)
    q = max((angular_points + 1) // 2, 2)
    lam = (dim - 3) / 2.0
    t, wt = _jacobi(q, lam, lam)
    sub_pts, sub_w = sphere_rule(dim - 1, angular_points)
    scale = np.sqrt(1.0 - t**2)
    pts = np.concatenate(
        [np.column_stack([np.full(len(sub_pts), ti), si * sub_pts]) for ti, si in zip(t, scale)]
    )
    w = (wt[:, None] * sub_w[None, :]).ravel()
    return pts, w


@lru_cache(maxsize=None)
def _unit_ball_rule(dim: int, radial_points: int, angular_points: int, edge_power: float = 0.0):
    rho, rw = radial_rule(radial_points, dim, edge_power)
    dirs, dw = sphere_rule(dim, angular_points)
    pts = (rho[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    w = (rw[:, None] * dw[None, :]).ravel()
    radius = np.repeat(rho, len(dw))
    return pts, w, radius


def ball_rule(dim: int, quad: QuadratureConfig = DEFAULT_QUAD):
    """Unit-ball rule: points, weights, |point|."""
    return _unit_ball_rule(dim, quad.radial_points, quad.angular_points)


# ---------------------------------------------------------------- helpers


def _evaluate(f, points):
    if isinstance(f, (int, float)):
        return np.full(len(points), float(f))
    return np.asarray(f(points), dtype=float)


def _refine(compute: Callable[[QuadratureConfig], tuple], quad: QuadratureConfig, what: str) -> float:
    """Repeat ``compute`` on refined configs until two passes agree.

    ``compute`` returns ``(value, scale)`` where scale is the integral of
    the absolute integrand; agreement is judged relative to it so that
    integrals that cancel to zero still converge.
    """
    value, scale = compute(quad)
    if quad.max_refinements == 0:
        return value
    for _ in range(quad.max_refinements):
        quad = quad.refined()
        new, scale = compute(quad)
        if abs(new - value) <= quad.target_rel_tol * max(scale, 1e-300):
            return new
        value = new
    raise QuadratureError(f"{what} did not settle to rel tol {quad.target_rel_tol}")


# ---------------------------------------------------------------- balls


def integrate_ball(f, ball: BallSpec, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Integral of ``f`` over ``ball``; ``f`` maps (N, n) points to (N,)."""
    c = np.asarray(ball.center)

    def compute(q):
        pts, w, _ = ball_rule(ball.dim, q)
        vals = _evaluate(f, c + ball.radius * pts)
        jac = ball.radius**ball.dim
        return jac * float(np.dot(w, vals)), jac * float(np.dot(w, np.abs(vals)))

    return _refine(compute, quad, "ball integral")


# ---------------------------------------------------------------- heatballs


class HeatballNodes(NamedTuple):
    """Cubature on a heatball: ``offset = x - y``, ``depth = t - s``."""

    offset: np.ndarray
    depth: np.ndarray
    weight: np.ndarray


@lru_cache(maxsize=None)
def _unit_heatball_nodes(n: int, quad: QuadratureConfig) -> HeatballNodes:
    s, sw = depth_rule(1.0, quad)
    rho = heatball_slice_radius(s, 1.0, n)
    pts, bw, _ = ball_rule(n, quad)
    offset = (rho[:, None, None] * pts[None, :, :]).reshape(-1, n)
    depth = np.repeat(s, len(bw))
    weight = (sw[:, None] * rho[:, None] ** n * bw[None, :]).ravel()
    return HeatballNodes(offset, depth, weight)


def heatball_nodes(spec: HeatballSpec, quad: QuadratureConfig = DEFAULT_QUAD) -> HeatballNodes:
    """Nodes for E(x, t; r), obtained from E(1) by parabolic scaling."""
    r, n = spec.radius, spec.spatial_dim
    unit = _unit_heatball_nodes(n, quad)
    return HeatballNodes(r * unit.offset, r * r * unit.depth, r ** (n + 2) * unit.weight)


def heatball_kernel_weight(offset, depth):
    """|x - y|^2 / (t - s)^2, the density behind the heatball averages."""
    return np.sum(offset**2, axis=1) / depth**2


def log_kernel_weight(r: float, n: int):
    """log(r^n Phi(x - y, t - s)) as a weight; nonnegative on E(x, t; r)."""

    def weight(offset, depth):
        return (
            n * math.log(r)
            - 0.5 * n * np.log(FOUR_PI * depth)
            - np.sum(offset**2, axis=1) / (4.0 * depth)
        )

    return weight


Weight = Union[str, Callable]


def resolve_weight(weight: Weight, spec) -> Callable:
    if callable(weight):
        return weight
    if weight == "unit":
        return lambda offset, depth: np.ones(len(depth))
    if weight == "heatball-kernel":
        return heatball_kernel_weight
    if weight == "log-kernel":
        return log_kernel_weight(spec.radius, spec.spatial_dim)
    if weight == "modified-kernel":
        return modified_kernel(spec.radius, spec.spatial_dim, spec.extra_dim)
    raise ValueError(f"unknown weight {weight!r}")


def integrate_heatball(f, spec: HeatballSpec, weight: Weight = "unit", quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Integral of f(y, s) * weight over E(x, t; r).

    ``f`` takes (N, n+1) space-time points; ``weight`` is a name
    ("unit", "heatball-kernel", "log-kernel") or a callable of
    ``(offset, depth)``. Depth 0 is never sampled.
    """
    wfun = resolve_weight(weight, spec)
    c = np.asarray(spec.center)

    def compute(q):
        nodes = heatball_nodes(spec, q)
        pts = np.column_stack([c[:-1] - nodes.offset, c[-1] - nodes.depth])
        vals = _evaluate(f, pts) * wfun(nodes.offset, nodes.depth)
        return float(np.dot(nodes.weight, vals)), float(np.dot(nodes.weight, np.abs(vals)))

    return _refine(compute, quad, "heatball integral")


# ---------------------------------------------------------------- modified heatballs


def modified_kernel(r: float, n: int, m: int):
    """Bounded kernel K_r of the (n, m)-modified heatball average.

    K_r(y, s) = 2 |B_1^m| A^m (m(m+n) log(r^2/4pi s)/s + |y|^2/s^2) / ((m+2) 4 r^{m+n})
    with A the radius of the eta-ball that was integrated out. Zero
    outside E_m.
    """
    bm = unit_ball_volume(m)
    norm = 2.0 * bm / ((m + 2) * 4.0 * r ** (m + n))

    def kernel(offset, depth):
        offset = np.atleast_2d(offset)
        depth = np.asarray(depth, dtype=float)
        ysq = np.sum(offset**2, axis=1)
        log = np.log(r * r / (FOUR_PI * depth))
        asq = np.clip(2.0 * depth * (m + n) * log - ysq, 0.0, None)
        body = m * (m + n) * log / depth + ysq / depth**2
        return np.where(asq > 0, norm * asq ** (m / 2) * body, 0.0)

    return kernel


@lru_cache(maxsize=None)
def _unit_modified_nodes(n: int, m: int, quad: QuadratureConfig) -> HeatballNodes:
    # The kernel carries (rho^2 - |y|^2)^{m/2}; the factor (rho - |y|)^{m/2} goes
    # into the Gauss-Jacobi weight, the smooth remainder is evaluated.
    r = 1.0
    s, sw = depth_rule(r, quad)
    rho = heatball_slice_radius(s, r, n + m)
    prad, prw = radial_rule(quad.radial_points, n, m / 2.0)
    dirs, dw = sphere_rule(n, quad.angular_points)
    frac = np.repeat(prad, len(dw))
    unit_pts = (prad[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    unit_w = (prw[:, None] * dw[None, :]).ravel()

    offset = (rho[:, None, None] * unit_pts[None, :, :]).reshape(-1, n)
    depth = np.repeat(s, len(unit_w))
    rho_rep = np.repeat(rho, len(unit_w))
    frac_rep = np.tile(frac, len(s))
    log = np.log(r * r / (FOUR_PI * depth))
    ysq = np.sum(offset**2, axis=1)
    bm = unit_ball_volume(m)
    norm = 2.0 * bm / ((m + 2) * 4.0 * r ** (m + n))
    # A^m = rho^m (1 - frac)^{m/2} (1 + frac)^{m/2}
    smooth = rho_rep**m * (1.0 + frac_rep) ** (m / 2)
    kern = norm * smooth * (m * (m + n) * log / depth + ysq / depth**2)
    weight = (sw[:, None] * rho[:, None] ** n * unit_w[None, :]).ravel() * kern
    return HeatballNodes(offset, depth, weight)


def modified_heatball_nodes(spec: ModifiedHeatballSpec, quad: QuadratureConfig = DEFAULT_QUAD) -> HeatballNodes:
    """Nodes whose weights already include K_r (so they sum to about 1)."""
    r, n = spec.radius, spec.spatial_dim
    unit = _unit_modified_nodes(n, spec.extra_dim, quad)
    # K_r(ry, r^2 s) = r^{-(n+2)} K_1(y, s), so the weights are scale free
    return HeatballNodes(r * unit.offset, r * r * unit.depth, unit.weight)


def integrate_modified_heatball(f, spec: ModifiedHeatballSpec, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Integral of K_r(x - y, t - s) f(y, s) over E_m(x, t; r)."""
    if spec.extra_dim < 3:
        raise ValueError("modified heatball kernel is only bounded for m >= 3")
    c = np.asarray(spec.center)

    def compute(q):
        nodes = modified_heatball_nodes(spec, q)
        pts = np.column_stack([c[:-1] - nodes.offset, c[-1] - nodes.depth])
        vals = _evaluate(f, pts)
        return float(np.dot(nodes.weight, vals)), float(np.dot(nodes.weight, np.abs(vals)))

    return _refine(compute, quad, "modified heatball integral")


# ---------------------------------------------------------------- maxima


@dataclass(frozen=True)
class WeightedRegion:
    """A region plus the weight a search or integral is taken against."""

    region: Union[BallSpec, HeatballSpec, ModifiedHeatballSpec]
    weight: Weight = "unit"


class MaxEstimate(NamedTuple):
    value: float
    argmax: np.ndarray
    refinement_delta: float


def _region_sampler(region):
    """Map unit-cube parameters to points of the region.

    Returns ``(dim_params, to_points)``; ``to_points(params)`` gives
    ``(points, offset, depth)`` with offset/depth None for plain balls.
    """
    if isinstance(region, BallSpec):
        n = region.dim
        c = np.asarray(region.center)

        def to_points(u):
            return c + region.radius * _cube_to_ball(u), None, None

        return n, to_points

    if isinstance(region, (HeatballSpec, ModifiedHeatballSpec)):
        n = region.spatial_dim
        r = region.radius
        c = np.asarray(region.center)
        dim_r = n + (region.extra_dim if isinstance(region, ModifiedHeatballSpec) else 0)
        top = max_heatball_depth(r)

        def to_points(u):
            # quartic depth map: kernels that vanish like s^{1/2} peak at small depth
            depth = top * np.clip(u[:, 0], 1e-3, 1.0 - 1e-12) ** 4
            rho = heatball_slice_radius(depth, r, dim_r)
            offset = rho[:, None] * _cube_to_ball(u[:, 1:])
            return np.column_stack([c[:-1] - offset, c[-1] - depth]), offset, depth

        return n + 1, to_points

    raise TypeError(f"unsupported region {type(region).__name__}")


def _cube_to_ball(u):
    """(radius fraction, angles...) in [0,1]^k -> points of the closed unit ball."""
    k = u.shape[1]
    frac = u[:, 0]
    if k == 1:
        return (2.0 * frac - 1.0)[:, None]
    if k == 2:
        th = 2.0 * math.pi * u[:, 1]
        return frac[:, None] * np.column_stack([np.cos(th), np.sin(th)])
    # k >= 3: hyperspherical angles, last one full circle
    pts = np.ones((len(u), k))
    sin_acc = np.ones(len(u))
    for j in range(1, k - 1):
        ang = math.pi * u[:, j]
        pts[:, j - 1] = sin_acc * np.cos(ang)
        sin_acc = sin_acc * np.sin(ang)
    th = 2.0 * math.pi * u[:, k - 1]
    pts[:, k - 2] = sin_acc * np.cos(th)
    pts[:, k - 1] = sin_acc * np.sin(th)
    return frac[:, None] * pts


def _grid(dim, counts, lows, highs):
    axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(lows, highs, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def max_on_region(g, region, quad: QuadratureConfig = DEFAULT_QUAD, grid_points: int = 0) -> MaxEstimate:
    """Grid estimate of sup g over a region, refined twice around the best node.

    The region is a BallSpec, HeatballSpec, ModifiedHeatballSpec, a box
    :class:`~ubsi.geometry.Domain`, or a :class:`WeightedRegion`. For heatball
    type regions ``g`` is called as ``g(offset, depth)``, for balls and boxes as
    ``g(points)``. The result is a lower estimate; ``refinement_delta`` is how
    much the two local refinements raised it.
    """
    from .geometry import Domain

    weight = None
    if isinstance(region, WeightedRegion):
        weight = resolve_weight(region.weight, region.region)
        region = region.region

    if isinstance(region, Domain):
        if region.shape != "box":
            raise ValueError("max_on_region supports box domains only")
        dim = region.dim
        lows, highs = np.asarray(region.lows), np.asarray(region.highs)

        def evaluate(u):
            pts = lows + u * (highs - lows)
            vals = _evaluate(g, pts)
            return vals, pts

    else:
        dim, to_points = _region_sampler(region)
        heatlike = not isinstance(region, BallSpec)

        def evaluate(u):
            pts, offset, depth = to_points(u)
            if heatlike:
                vals = np.asarray(g(offset, depth), dtype=float)
                if weight is not None:
                    vals = vals * weight(offset, depth)
            else:
                vals = _evaluate(g, pts)
                if weight is not None:
                    raise ValueError("weights are only defined on heatball regions")
            return vals, pts

    count = grid_points or max(quad.slice_count, quad.radial_points, 16) + 1
    per_axis = max(int(round(count ** (2.0 / max(dim, 2)))), 5) if dim > 2 else count
    u = _grid(dim, [per_axis] * dim, [0.0] * dim, [1.0] * dim)
    vals, pts = evaluate(u)
    best = int(np.argmax(vals))
    first = float(vals[best])
    centre = u[best]
    step = 1.0 / (per_axis - 1)
    value, arg = first, pts[best]
    for _ in range(2):
        lo = np.clip(centre - step, 0.0, 1.0)
        hi = np.clip(centre + step, 0.0, 1.0)
        local = _grid(dim, [9] * dim, lo, hi)
        lv, lp = evaluate(local)
        j = int(np.argmax(lv))
        if lv[j] > value:
            value, arg, centre = float(lv[j]), lp[j], local[j]
        step /= 4.0
    return MaxEstimate(value, np.asarray(arg), value - first)
