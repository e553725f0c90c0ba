"""Grid estimates of superlevel/sublevel measures and L^p norms.

The domain is cut into equal cells (equal-measure polar cells for balls in
dimension <= 3). Each cell is classified by the value at its centre; its
corner values give an inner/outer bracket around that estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Domain

DEFAULT_RESOLUTION = {1: 4096, 2: 512, 3: 128}


def default_resolution(dim: int) -> int:
    return DEFAULT_RESOLUTION.get(dim, 32)


@dataclass(frozen=True)
class LevelSetEstimate:
    threshold: float
    direction: str  # "superlevel" (|u| >= c) or "sublevel" (|u| <= c)
    estimate: float
    inner: float
    outer: float
    resolution: int
    domain_measure: float

    @property
    def bracket_width(self) -> float:
        return self.outer - self.inner


@dataclass(frozen=True)
class NormEstimate:
    p: float
    value: float
    resolution: int
    refinement_delta: float = 0.0


@dataclass
class GridSample:
    """|u| on the cells of a domain: centre value, cell min/max over corners+centre, cell weight."""

    centre: np.ndarray
    low: np.ndarray
    high: np.ndarray
    weight: np.ndarray
    resolution: int
    domain_measure: float
    # for refinement of the sup: centre points and cell size in parameter space
    points: np.ndarray
    signed: np.ndarray


def conjugate_exponent(p: float) -> float:
    """p' with 1/p + 1/p' = 1; 1 <-> inf."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def indicator_norm(measure: float, q: float) -> float:
    """L^q norm of an indicator of a set with the given measure."""
    if math.isinf(q):
        return 1.0 if measure > 0 else 0.0
    return measure ** (1.0 / q)


# ---------------------------------------------------------------- grids


def _param_grid(dim: int, res: int):
    centres = (np.arange(res) + 0.5) / res
    verts = np.arange(res + 1) / res
    cmesh = np.meshgrid(*([centres] * dim), indexing="ij")
    vmesh = np.meshgrid(*([verts] * dim), indexing="ij")
    return np.column_stack([g.ravel() for g in cmesh]), np.column_stack([g.ravel() for g in vmesh])


def _ball_map(u: np.ndarray, dom: Domain) -> np.ndarray:
    """Equal-measure map from [0,1]^d onto a ball (d <= 3)."""
    d = dom.dim
    c = np.asarray(dom.center)
    R = dom.radius
    if d == 1:
        return c + R * (2.0 * u - 1.0)
    if d == 2:
        r = R * np.sqrt(u[:, 0])
        th = 2.0 * math.pi * u[:, 1]
        return c + np.column_stack([r * np.cos(th), r * np.sin(th)])
    if d == 3:
        r = R * np.cbrt(u[:, 0])
        ct = 1.0 - 2.0 * u[:, 1]
        st = np.sqrt(np.clip(1.0 - ct * ct, 0.0, None))
        ph = 2.0 * math.pi * u[:, 2]
        return c + r[:, None] * np.column_stack([st * np.cos(ph), st * np.sin(ph), ct])
    raise ValueError("equal-measure ball cells only for dimension <= 3")


def _cell_extremes(vert_vals: np.ndarray, dim: int, res: int):
    v = vert_vals.reshape((res + 1,) * dim)
    lo = None
    hi = None
    for corner in range(2**dim):
        sl = tuple(slice(1, None) if (corner >> k) & 1 else slice(None, -1) for k in range(dim))
        block = v[sl]
        # fmin/fmax skip NaN, which marks vertices outside the domain
        lo = block if lo is None else np.fmin(lo, block)
        hi = block if hi is None else np.fmax(hi, block)
    return lo.ravel(), hi.ravel()


def sample_field(f, dom: Domain, resolution: Optional[int] = None) -> GridSample:
    if dom.is_empty:
        raise ValueError("cannot sample an empty domain")
    d = dom.dim
    res = resolution or default_resolution(d)
    if res < 8:
        raise ValueError("resolution must be >= 8")
    cu, vu = _param_grid(d, res)
    if dom.shape == "box" or dom.shape == "parallelepiped":
        lo, hi = dom.bounding_box()
        cpts = lo + cu * (hi - lo)
        vpts = lo + vu * (hi - lo)
        cell = float(np.prod(hi - lo)) / res**d
        if dom.shape == "box":
            weight = np.full(len(cpts), cell)
        else:
            weight = np.where(dom.contains(cpts), cell, 0.0)
    elif dom.shape == "ball" and d <= 3:
        cpts = _ball_map(cu, dom)
        vpts = _ball_map(vu, dom)
        weight = np.full(len(cpts), dom.measure / res**d)
    elif dom.shape == "ball":
        lo, hi = dom.bounding_box()
        cpts = lo + cu * (hi - lo)
        vpts = lo + vu * (hi - lo)
        weight = np.where(dom.contains(cpts), float(np.prod(hi - lo)) / res**d, 0.0)
    else:
        raise ValueError(f"unsupported domain {dom.shape}")
    signed = np.asarray(f(cpts), dtype=float)
    centre = np.abs(signed)
    vvals = np.abs(np.asarray(f(vpts), dtype=float))
    if dom.shape != "box":
        vvals = np.where(dom.contains(vpts), vvals, np.nan)
    vlo, vhi = _cell_extremes(vvals, d, res)
    low = np.fmin(vlo, centre)
    high = np.fmax(vhi, centre)
    return GridSample(centre, low, high, weight, res, dom.measure, cpts, signed)


def _sample(f, dom, resolution):
    return f if isinstance(f, GridSample) else sample_field(f, dom, resolution)


# ---------------------------------------------------------------- measures


def measure_superlevel(f, dom: Domain, c: float, resolution: Optional[int] = None) -> LevelSetEstimate:
    """|{x in dom : |u(x)| >= c}| with an inner/outer bracket.

    ``f`` may be a field or a :class:`GridSample` from :func:`sample_field`.
    """
    if c < 0:
        raise ValueError("threshold must be >= 0")
    s = _sample(f, dom, resolution)
    w = s.weight
    return LevelSetEstimate(
        threshold=c,
        direction="superlevel",
        estimate=float(np.sum(w[s.centre >= c])),
        inner=float(np.sum(w[s.low >= c])),
        outer=float(np.sum(w[s.high >= c])),
        resolution=s.resolution,
        domain_measure=s.domain_measure,
    )


def measure_sublevel(f, dom: Domain, c: float, resolution: Optional[int] = None) -> LevelSetEstimate:
    """|{x in dom : |u(x)| <= c}| with an inner/outer bracket."""
    if c < 0:
        raise ValueError("threshold must be >= 0")
    s = _sample(f, dom, resolution)
    w = s.weight
    return LevelSetEstimate(
        threshold=c,
        direction="sublevel",
        estimate=float(np.sum(w[s.centre <= c])),
        inner=float(np.sum(w[s.high <= c])),
        outer=float(np.sum(w[s.low <= c])),
        resolution=s.resolution,
        domain_measure=s.domain_measure,
    )


def measure_superlevel_mc(f, dom: Domain, c: float, samples: int = 200_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo cross-check: (estimate, standard error) from uniform bounding-box samples."""
    rng = np.random.default_rng(seed)
    lo, hi = dom.bounding_box()
    pts = lo + rng.random((samples, dom.dim)) * (hi - lo)
    box = float(np.prod(hi - lo))
    hit = dom.contains(pts) & (np.abs(np.asarray(f(pts), dtype=float)) >= c)
    frac = hit.mean()
    return box * frac, box * math.sqrt(frac * (1.0 - frac) / samples)


# ---------------------------------------------------------------- norms


def _refined_sup(f, s: GridSample, dom: Domain) -> float:
    """Sup of |u| refined around the best grid cell (nested 9^d local grids, 4x finer each round)."""
    if not callable(f) or isinstance(f, GridSample):
        return float(np.max(s.high[s.weight > 0]))
    high = np.where(s.weight > 0, s.high, -np.inf)
    grid_best = float(np.max(high))
    i = int(np.argmax(high))
    centre = s.points[i]
    local_best = float(s.centre[i])
    lo, hi = dom.bounding_box()
    step = (hi - lo) / s.resolution
    d = dom.dim
    for _ in range(10):
        axes = [np.linspace(centre[k] - step[k], centre[k] + step[k], 9) for k in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([g.ravel() for g in mesh])
        pts = pts[dom.contains(pts)]
        if len(pts) == 0:
            break
        vals = np.abs(np.asarray(f(pts), dtype=float))
        j = int(np.argmax(vals))
        if vals[j] > local_best:
            local_best, centre = float(vals[j]), pts[j]
        step = step / 4.0
    best = max(grid_best, local_best)
    return best


def lp_norm(f, dom: Domain, p: float, resolution: Optional[int] = None) -> NormEstimate:
    """Midpoint-rule L^p norm; p = inf gives a refined grid max of |u|."""
    if p < 1:
        raise ValueError("p must be >= 1")
    s = _sample(f, dom, resolution)
    if math.isinf(p):
        grid = float(np.max(s.high[s.weight > 0]))
        sup = _refined_sup(f, s, dom)
        return NormEstimate(p, sup, s.resolution, sup - grid)
    mask = s.weight > 0
    return NormEstimate(p, float(np.sum(s.weight[mask] * s.centre[mask] ** p)) ** (1.0 / p), s.resolution)


def inequality_lhs(norm: float, measure: float, p: float) -> float:
    """||u||_p * |{|u| >= c}|^{1/p'}."""
    return norm * indicator_norm(measure, conjugate_exponent(p))


@dataclass(frozen=True)
class ChebyshevCheck:
    holds: bool
    lhs: float
    rhs: float


def chebyshev_check(f, dom: Domain, eps: float, p: float, resolution: Optional[int] = None) -> ChebyshevCheck:
    """eps |{|u| >= eps}|^{1/p} <= ||u||_p, using the outer bracket on the left."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = _sample(f, dom, resolution)
    meas = measure_superlevel(s, dom, eps)
    lhs = eps * indicator_norm(meas.outer, p)
    rhs = lp_norm(s, dom, p).value
    return ChebyshevCheck(bool(lhs <= rhs), lhs, rhs)
