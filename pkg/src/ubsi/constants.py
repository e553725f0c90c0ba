"""Explicit constants from the constructive proofs.

Laplacian: c < min{(C_n/16) d^2 |Omega_d|, (1 + |B_{d/2}|^{-1})^{-1} (C_n/16) d^2}.
Heat:      c < min{C_R^{-1} (C_mn/16) R^2, (C_mn/16) R^2, (C_mn/16) R^2 |Omega_R|}
with C_R = M_R (|E_m(R)| + 1) and C_mn = (m+n) |E^{(m+n)}(1)| / e^{m+n+2}.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .geometry import (
    BallSpec,
    Domain,
    ModifiedHeatballSpec,
    modified_heatball_volume,
    shrink_domain,
    shrink_domain_heat,
    unit_ball_volume,
    unit_heatball_volume,
    unit_sphere_area,
)
from .quadrature import DEFAULT_QUAD, QuadratureConfig, max_on_region, modified_kernel

DEFAULT_SAFETY = 0.9
GRID_POINTS = 32


class EmptyDomainError(ValueError):
    """The shrunken domain has no interior, so no constant can be formed."""


@dataclass
class ConstantReport:
    kind: str
    c: float
    safety: float
    terms: dict
    intermediates: dict
    domain: dict
    shrunk_domain: dict
    scale: float  # delta (Laplacian) or R (heat)
    scale_chosen_by: str = "user"
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def satisfies_strictness(self) -> bool:
        return all(self.c < t for t in self.terms.values()) and all(v > 0 for v in self.intermediates.values() if isinstance(v, float))


def laplace_cn(n: int) -> float:
    """C_n from |dB_1|/|B_1| (1/2n - 1/2(n+2)); equals 1/(n+2)."""
    return unit_sphere_area(n) / unit_ball_volume(n) * (1.0 / (2 * n) - 1.0 / (2 * (n + 2)))


def _log_grid(upper: float, points: int = GRID_POINTS) -> np.ndarray:
    return np.geomspace(1e-3 * upper, upper, points + 1)[:-1]


def _laplace_terms(dom: Domain, delta: float):
    n = dom.dim
    shrunk = shrink_domain(dom, delta)
    if shrunk.is_empty:
        raise EmptyDomainError(f"Omega_delta is empty for delta={delta}")
    cn = laplace_cn(n)
    half_ball = BallSpec((0.0,) * n, delta / 2).volume
    base = cn / 16.0 * delta**2
    terms = {
        "interior_mass": base * shrunk.measure,
        "mean_value": base / (1.0 + 1.0 / half_ball),
    }
    terms = {k: float(v) for k, v in terms.items()}
    inter = {"C_n": cn, "ball_half_delta_volume": half_ball, "shrunk_measure": shrunk.measure}
    return terms, inter, shrunk


def _max_shrink(dom: Domain) -> float:
    if dom.shape == "box":
        return 0.5 * float(np.min(np.subtract(dom.highs, dom.lows)))
    if dom.shape == "ball":
        return dom.radius
    raise ValueError(f"no shrinkage for {dom.shape}")


def laplace_constant(dom: Domain, delta: Optional[float] = None, safety: float = DEFAULT_SAFETY) -> ConstantReport:
    """Constant c for Laplacian >= 1 on ``dom``.

    Without ``delta`` the shrink distance maximising c over a 32-point log
    grid is used.
    """
    if not 0 < safety < 1:
        raise ValueError("safety must lie in (0, 1)")
    chosen = "user"
    if delta is None:
        best = None
        for d in _log_grid(_max_shrink(dom)):
            terms, _, _ = _laplace_terms(dom, d)
            val = min(terms.values())
            if best is None or val > best[0]:
                best = (val, d)
        delta, chosen = float(best[1]), "log-grid"
    terms, inter, shrunk = _laplace_terms(dom, delta)
    return ConstantReport(
        kind="laplace",
        c=float(safety * min(terms.values())),
        safety=safety,
        terms=terms,
        intermediates=inter,
        domain=dom.describe(),
        shrunk_domain=shrunk.describe(),
        scale=delta,
        scale_chosen_by=chosen,
    )


def heat_cmn(n: int, m: int, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """C_{m,n} = (m+n) |E(1)| / e^{m+n+2}, heatball taken in m+n space dimensions."""
    d = m + n
    return d * unit_heatball_volume(d, quad) / math.e ** (d + 2)


def kernel_max(R: float, n: int, m: int, quad: QuadratureConfig = DEFAULT_QUAD):
    spec = ModifiedHeatballSpec((0.0,) * (n + 1), R, m)
    return max_on_region(modified_kernel(R, n, m), spec, quad)


def _heat_terms(dom: Domain, R: float, m: int, quad: QuadratureConfig):
    n = dom.dim - 1
    shrunk = shrink_domain_heat(dom, R, n, m)
    if shrunk.is_empty:
        raise EmptyDomainError(f"Omega_R is empty for R={R}")
    est = kernel_max(R, n, m, quad)
    m_r = est.value + est.refinement_delta
    em = modified_heatball_volume(ModifiedHeatballSpec((0.0,) * (n + 1), R, m), quad)
    c_r = m_r * (em + 1.0)
    cmn = heat_cmn(n, m, quad)
    base = cmn / 16.0 * R * R
    terms = {
        "kernel_bound": base / c_r,
        "decay": base,
        "interior_mass": base * shrunk.measure,
    }
    terms = {k: float(v) for k, v in terms.items()}
    inter = {
        "M_R": m_r,
        "M_R_grid": est.value,
        "M_R_refinement_delta": est.refinement_delta,
        "modified_heatball_volume": em,
        "C_R": c_r,
        "C_mn": cmn,
        "shrunk_measure": shrunk.measure,
    }
    return terms, inter, shrunk


def _max_heat_radius(dom: Domain, n: int, m: int) -> float:
    lo, hi = 1e-6, 1.0
    while not shrink_domain_heat(dom, hi, n, m).is_empty:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if shrink_domain_heat(dom, mid, n, m).is_empty:
            hi = mid
        else:
            lo = mid
    return lo


def heat_constant(
    dom: Domain,
    R: Optional[float] = None,
    m: int = 3,
    quad: QuadratureConfig = DEFAULT_QUAD,
    safety: float = DEFAULT_SAFETY,
) -> ConstantReport:
    """Constant c for Hu >= 1 on a space-time domain of dimension n+1."""
    if m < 3:
        raise ValueError("modified heatballs need m >= 3")
    if not 0 < safety < 1:
        raise ValueError("safety must lie in (0, 1)")
    n = dom.dim - 1
    if n < 1:
        raise ValueError("space-time domain needs dimension >= 2")
    chosen = "user"
    if R is None:
        best = None
        for r in _log_grid(_max_heat_radius(dom, n, m)):
            terms, _, _ = _heat_terms(dom, r, m, quad)
            val = min(terms.values())
            if best is None or val > best[0]:
                best = (val, r)
        R, chosen = float(best[1]), "log-grid"
    terms, inter, shrunk = _heat_terms(dom, R, m, quad)
    return ConstantReport(
        kind="heat",
        c=float(safety * min(terms.values())),
        safety=safety,
        terms=terms,
        intermediates={**inter, "m": m, "n": n},
        domain=dom.describe(),
        shrunk_domain=shrunk.describe(),
        scale=R,
        scale_chosen_by=chosen,
        notes=["M_R inflated by its grid refinement delta"],
    )


def chebyshev_constant(C: float, delta_exp: float, omega_measure: float) -> float:
    """c from a sublevel estimate |{|u| <= e}| <= C e^delta on a set of measure |Omega|.

    eps solves C eps^delta = |Omega|/2; c = eps when |Omega|/2 >= 1, else eps |Omega|/2.
    """
    if C <= 0 or delta_exp <= 0 or omega_measure <= 0:
        raise ValueError("C, delta_exp and omega_measure must be positive")
    half = omega_measure / 2.0
    eps = (half / C) ** (1.0 / delta_exp)
    return eps if half >= 1.0 else eps * half


def rescale_constant(c: float, A: float) -> tuple[float, float]:
    """(threshold, bound) for the class Du >= A, from c for the class Du >= 1."""
    if A <= 0:
        raise ValueError("A must be positive")
    return c * A, c * A


def laplace_chain(field, x, delta: float, c: float, quad: QuadratureConfig = DEFAULT_QUAD) -> dict:
    """Intermediate quantities of the Laplacian argument at a point x of Omega_delta.

    ``mean_value_gap`` = ball average over B_{delta/2}(x) minus u(x), which the
    derivative formula bounds below by (C_n/8) delta^2 when Laplacian u >= 1.
    ``average_cap`` = (1 + |B_{delta/2}|^{-1}) c, the bound on that ball
    average whenever the inequality fails with constant c.
    """
    from .averages import AverageFamily, ball_average, center_value

    x = tuple(np.atleast_1d(np.asarray(x, dtype=float)))
    n = len(x)
    fam = AverageFamily("ball", field, x, delta / 2, quad)
    avg = ball_average(fam, delta / 2)
    ux = center_value(fam)
    cn = laplace_cn(n)
    half_ball = BallSpec(x, delta / 2).volume
    return {
        "u_x": ux,
        "ball_average": avg,
        "mean_value_gap": avg - ux,
        "gap_lower_bound": cn / 8.0 * delta**2,
        "average_cap": (1.0 + 1.0 / half_ball) * c,
        "u_x_cap": (1.0 + 1.0 / half_ball) * c - cn / 8.0 * delta**2,
    }
