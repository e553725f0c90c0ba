"""Ball, heatball and modified-heatball average families and their radial derivatives."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import roots_legendre

from .fields import ScalarField, lift
from .geometry import (
    BallSpec,
    Domain,
    HeatballSpec,
    ModifiedHeatballSpec,
    max_heatball_depth,
    max_slice_radius,
)
from .quadrature import (
    DEFAULT_QUAD,
    QuadratureConfig,
    integrate_ball,
    integrate_heatball,
    integrate_modified_heatball,
    log_kernel_weight,
)

KINDS = ("ball", "heatball", "modified-heatball")


class DegradedAccuracyWarning(UserWarning):
    """An operator value came from finite differences instead of a closed form."""


class Derivative(float):
    """A float that remembers whether finite differences fed into it."""

    degraded: bool

    def __new__(cls, value, degraded=False):
        obj = super().__new__(cls, value)
        obj.degraded = degraded
        return obj


@dataclass(frozen=True)
class AverageFamily:
    kind: str
    field: ScalarField
    center: tuple
    max_radius: float
    quad: QuadratureConfig = DEFAULT_QUAD
    extra_dim: Optional[int] = None
    domain: Optional[Domain] = None

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.max_radius <= 0:
            raise ValueError("max_radius must be positive")
        if len(self.center) != self.field.arity:
            raise ValueError("centre dimension does not match the field")
        if self.kind != "ball" and not self.field.spacetime:
            raise ValueError("heatball families need a space-time field")
        if self.kind == "modified-heatball" and (self.extra_dim is None or self.extra_dim < 3):
            raise ValueError("modified heatball families need extra_dim >= 3")
        if self.domain is not None and not _box_inside(self.region_box(self.max_radius), self.domain):
            raise ValueError("region at max_radius leaves the domain")

    @property
    def n(self) -> int:
        return self.field.spatial_dim

    def region_box(self, r: float):
        c = np.asarray(self.center)
        if self.kind == "ball":
            return c - r, c + r
        dim = self.n + (self.extra_dim or 0)
        w = max_slice_radius(r, dim)
        lo = np.append(c[:-1] - w, c[-1] - max_heatball_depth(r))
        hi = np.append(c[:-1] + w, c[-1])
        return lo, hi

    def _check(self, r: float, closed: bool = True):
        ok = 0 < r <= self.max_radius if closed else 0 < r < self.max_radius
        if not ok:
            raise ValueError(f"radius {r} outside (0, {self.max_radius}]")


def _box_inside(box, dom: Domain) -> bool:
    lo, hi = box
    if dom.shape == "box":
        return bool(np.all(lo >= dom.lows) and np.all(hi <= dom.highs))
    from .geometry import _box_corners

    return bool(np.all(dom.contains(_box_corners(lo, hi))))


def _operator(field: ScalarField, op: str):
    exact = field.analytic(op)
    if exact is not None:
        return exact, False
    warnings.warn(f"{field.label}: {op} from finite differences", DegradedAccuracyWarning, stacklevel=3)
    return (lambda p: field.operator(op, p)[0]), True


# ---------------------------------------------------------------- balls


def ball_average(fam: AverageFamily, r: float) -> float:
    fam._check(r)
    ball = BallSpec(fam.center, r)
    return integrate_ball(fam.field, ball, fam.quad) / ball.volume


def ball_average_derivative(fam: AverageFamily, r: float) -> Derivative:
    """(1/|B_r|) int_{B_r(x)} (r^2 - |x-y|^2)/(2r) Laplacian u(y) dy."""
    fam._check(r, closed=False)
    lap, degraded = _operator(fam.field, "laplacian")
    c = np.asarray(fam.center)

    def integrand(p):
        return (r * r - np.sum((p - c) ** 2, axis=1)) / (2.0 * r) * lap(p)

    ball = BallSpec(fam.center, r)
    return Derivative(integrate_ball(integrand, ball, fam.quad) / ball.volume, degraded)


# ---------------------------------------------------------------- heatballs


def heatball_average(fam: AverageFamily, r: float) -> float:
    """(1 / 4r^n) int_{E(x,t;r)} u(y,s) |x-y|^2/(t-s)^2 dy ds."""
    fam._check(r)
    spec = HeatballSpec(fam.center, r)
    return integrate_heatball(fam.field, spec, "heatball-kernel", fam.quad) / (4.0 * r**fam.n)


def modified_heatball_average(fam: AverageFamily, r: float) -> float:
    """int_{E_m(x,t;r)} K_r(x-y, t-s) u(y,s) dy ds."""
    fam._check(r)
    spec = ModifiedHeatballSpec(fam.center, r, fam.extra_dim)
    return integrate_modified_heatball(fam.field, spec, fam.quad)


def lifted_heatball_average(fam: AverageFamily, r: float) -> float:
    """The (m+n)-dimensional heatball average of the lifted field, done directly."""
    fam._check(r)
    m = fam.extra_dim
    sub = AverageFamily("heatball", lift(fam.field, m), (0.0,) * m + fam.center, fam.max_radius, fam.quad)
    return heatball_average(sub, r)


def heatball_average_derivative(fam: AverageFamily, r: float) -> Derivative:
    """(n / r^{n+1}) int_{E(x,t;r)} Hu(y,s) log(r^n Phi(x-y, t-s)) dy ds.

    For the modified family the formula is applied in m+n space dimensions
    to the lifted field, whose heat operator equals Hu.
    """
    fam._check(r, closed=False)
    field, center = fam.field, fam.center
    if fam.kind == "modified-heatball":
        field = lift(field, fam.extra_dim)
        center = (0.0,) * fam.extra_dim + center
    heat, degraded = _operator(field, "heat")
    spec = HeatballSpec(center, r)
    d = spec.spatial_dim
    value = integrate_heatball(heat, spec, log_kernel_weight(r, d), fam.quad)
    return Derivative(d / r ** (d + 1) * value, degraded)


def average(fam: AverageFamily, r: float) -> float:
    if fam.kind == "ball":
        return ball_average(fam, r)
    if fam.kind == "heatball":
        return heatball_average(fam, r)
    return modified_heatball_average(fam, r)


def average_derivative(fam: AverageFamily, r: float) -> Derivative:
    if fam.kind == "ball":
        return ball_average_derivative(fam, r)
    return heatball_average_derivative(fam, r)


def center_value(fam: AverageFamily) -> float:
    return float(fam.field(np.asarray(fam.center)[None, :])[0])


# ---------------------------------------------------------------- checks


def finite_difference_derivative(fam: AverageFamily, r: float, h: Optional[float] = None) -> float:
    """Centred difference (phi(r+h) - phi(r-h)) / 2h of the average family."""
    h = h or 1e-3 * fam.max_radius
    if not (0 < r - h and r + h <= fam.max_radius):
        raise ValueError("finite-difference stencil leaves (0, R]")
    return (average(fam, r + h) - average(fam, r - h)) / (2.0 * h)


def reconstruct_center_value(fam: AverageFamily, points: int = 12, r_min_fraction: float = 1e-3) -> float:
    """u(centre) = phi(R) - int_0^R phi'(r) dr.

    Gauss-Legendre on [r_min, R]; below r_min phi' is taken linear in r
    (phi' ~ C r near 0 for every family here), contributing phi'(r_min) r_min / 2.
    """
    R = fam.max_radius
    r_min = r_min_fraction * R
    x, w = roots_legendre(points)
    rs = r_min + 0.5 * (R - r_min) * (x + 1.0)
    integral = 0.5 * (R - r_min) * sum(wi * average_derivative(fam, ri) for ri, wi in zip(rs, w))
    integral += 0.5 * r_min * average_derivative(fam, r_min)
    return average(fam, R) - integral
