"""End-to-end verification runs behind the CLI.

Each command takes a validated config dict and returns a :class:`RunResult`:
CSV-ready rows (one per verdict), a JSON-ready summary, and an overall
pass flag that decides the exit code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import constants as K
from .averages import (
    AverageFamily,
    average_derivative,
    finite_difference_derivative,
)
from .fields import ScalarField, heat_catalog, laplace_catalog, make_field, make_gressman, make_rectangle_family
from .geometry import Domain, HeatballSpec, heatball_volume
from .levelsets import (
    default_resolution,
    inequality_lhs,
    lp_norm,
    measure_superlevel,
    measure_superlevel_mc,
    sample_field,
)
from .quadrature import QuadratureConfig


class HypothesisViolation(RuntimeError):
    """The operator lower bound fails at a grid point, so the theorem does not apply."""

    def __init__(self, op, point, value, bound):
        super().__init__(f"{op} = {value:.6g} < {bound:g} at {np.round(point, 6).tolist()}")
        self.point = point
        self.value = value


@dataclass
class RunResult:
    command: str
    rows: list
    summary: dict = field(default_factory=dict)
    passed: bool = True


@dataclass
class InequalityReport:
    field: str
    domain: dict
    p: float
    c: float
    c_provenance: str
    lp_norm: float
    superlevel: float
    superlevel_inner: float
    superlevel_outer: float
    lhs: float
    lhs_inner: float
    lhs_outer: float
    resolution: int

    @property
    def verdict(self) -> bool:
        return self.lhs_inner >= self.c

    def row(self) -> dict:
        return {
            "field": self.field,
            "domain": self.domain["shape"],
            "p": _fmt_p(self.p),
            "c": self.c,
            "c_provenance": self.c_provenance,
            "lp_norm": self.lp_norm,
            "superlevel": self.superlevel,
            "superlevel_inner": self.superlevel_inner,
            "superlevel_outer": self.superlevel_outer,
            "lhs": self.lhs,
            "lhs_inner": self.lhs_inner,
            "lhs_outer": self.lhs_outer,
            "resolution": self.resolution,
            "verdict": self.verdict,
        }


def _fmt_p(p):
    return "inf" if math.isinf(p) else p


def parse_p(values) -> list:
    out = []
    for v in values:
        if isinstance(v, str) and v.lower() in ("inf", "infinity", "oo"):
            out.append(math.inf)
        else:
            out.append(float(v))
    for p in out:
        if p < 1:
            raise ValueError(f"p must be >= 1, got {p}")
    return out


def build_domain(spec: dict) -> Domain:
    shape = spec.get("shape", "box")
    if shape == "box":
        return Domain.box(spec["lows"], spec["highs"])
    if shape == "ball":
        return Domain.ball(spec["center"], spec["radius"])
    raise ValueError(f"unknown domain shape {shape!r}")


def build_quad(spec: Optional[dict]) -> QuadratureConfig:
    return QuadratureConfig(**(spec or {}))


# ---------------------------------------------------------------- hypothesis


def check_hypothesis(f: ScalarField, op: str, dom: Domain, bound: float = 1.0, resolution: int = 24) -> dict:
    """Grid check of op(u) >= bound on the domain (cell centres)."""
    s_pts = sample_field(lambda p: np.zeros(len(p)), dom, resolution).points
    vals, degraded = f.operator(op, s_pts)
    i = int(np.argmin(vals))
    if vals[i] < bound:
        raise HypothesisViolation(op, s_pts[i], float(vals[i]), bound)
    return {"operator": op, "min_value": float(vals[i]), "argmin": s_pts[i].tolist(), "degraded": degraded, "grid": resolution}


# ---------------------------------------------------------------- inequality


def evaluate_inequality(
    f, dom: Domain, c: float, ps, resolution: Optional[int] = None, provenance: str = "user", label: str = ""
) -> list[InequalityReport]:
    """||u||_p |{|u| >= c}|^{1/p'} against c for each p, from one grid sample."""
    s = sample_field(f, dom, resolution)
    meas = measure_superlevel(s, dom, c)
    out = []
    for p in ps:
        norm = lp_norm(f if math.isinf(p) else s, dom, p, s.resolution).value
        out.append(
            InequalityReport(
                field=label or getattr(f, "label", ""),
                domain=dom.describe(),
                p=p,
                c=c,
                c_provenance=provenance,
                lp_norm=norm,
                superlevel=meas.estimate,
                superlevel_inner=meas.inner,
                superlevel_outer=meas.outer,
                lhs=inequality_lhs(norm, meas.estimate, p),
                lhs_inner=inequality_lhs(norm, meas.inner, p),
                lhs_outer=inequality_lhs(norm, meas.outer, p),
                resolution=s.resolution,
            )
        )
    return out


def _theorem_for(f: ScalarField, cfg: dict) -> str:
    return cfg.get("theorem") or ("heat" if f.spacetime else "laplace")


def check_inequality(cfg: dict) -> RunResult:
    f = make_field(cfg["field"]["family"], cfg["field"].get("params"))
    dom = build_domain(cfg["domain"])
    if f.arity != dom.dim:
        raise ValueError(f"field {f.label} has {f.arity} variables but the domain has dimension {dom.dim}")
    ps = parse_p(cfg.get("p", [1, 2, 4, "inf"]))
    theorem = _theorem_for(f, cfg)
    op = {"laplace": "laplacian", "heat": "heat"}[theorem]
    hyp = check_hypothesis(f, op, dom)
    if "c" in cfg:
        c, provenance, report = float(cfg["c"]), "user", None
    elif theorem == "laplace":
        report = K.laplace_constant(dom, cfg.get("delta"), cfg.get("safety", K.DEFAULT_SAFETY))
        c, provenance = report.c, "constants.laplace_constant"
    else:
        report = K.heat_constant(
            dom, cfg.get("R"), cfg.get("extra_dim", 3), build_quad(cfg.get("quadrature")), cfg.get("safety", K.DEFAULT_SAFETY)
        )
        c, provenance = report.c, "constants.heat_constant"
    reports = evaluate_inequality(f, dom, c, ps, cfg.get("resolution"), provenance, f.label)
    mc, mc_err = measure_superlevel_mc(f, dom, c, seed=cfg.get("seed", 0))
    rows = [{**r.row(), "superlevel_mc": mc, "superlevel_mc_stderr": mc_err} for r in reports]
    return RunResult(
        "check-inequality",
        rows,
        {
            "theorem": theorem,
            "hypothesis": hyp,
            "c": c,
            "c_provenance": provenance,
            "constant_report": report.to_dict() if report else None,
            "shared_c": len({r["c"] for r in rows}) == 1,
        },
        passed=all(r.verdict for r in reports),
    )


# ---------------------------------------------------------------- counterexample


def gressman_sup(N: int) -> float:
    """sup over [0,1]^2 of |e^x sin(Ny)/N|."""
    return math.e * (1.0 if N >= 2 else math.sin(1.0)) / N


def counterexample_sweep(c: float, N_values, p: float = math.inf, resolution: int = 512, dethess_grid: int = 200) -> RunResult:
    """Gressman family u_N on [0,1]^2: the superlevel set {|u_N| >= c} empties for large N."""
    if c <= 0:
        raise ValueError("c must be positive")
    dom = Domain.unit_box(2)
    g = np.linspace(0.0, 1.0, dethess_grid)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    grid_pts = np.column_stack([gx.ravel(), gy.ravel()])
    rows = []
    first_empty = None
    for N in N_values:
        f = make_gressman(int(N))
        s = sample_field(f, dom, resolution)
        meas = measure_superlevel(s, dom, c)
        sup = lp_norm(f, dom, math.inf, resolution).value
        norm = sup if math.isinf(p) else lp_norm(s, dom, p).value
        dmin = float(np.min(f.analytic_dethess(grid_pts)))
        empty = sup < c
        if empty and first_empty is None:
            first_empty = int(N)
        rows.append(
            {
                "N": int(N),
                "c": c,
                "p": _fmt_p(p),
                "sup_grid": sup,
                "sup_exact": gressman_sup(int(N)),
                "superlevel": meas.estimate,
                "superlevel_outer": meas.outer,
                "lhs": inequality_lhs(norm, meas.estimate, p),
                "empty": empty,
                "dethess_min": dmin,
                "verdict": dmin >= 1.0,
            }
        )
    # e/N < c  <=>  N > e/c
    expected = math.floor(math.e / c) + 1
    swept = [int(N) for N in N_values]
    consistent = first_empty == expected if min(swept) <= expected <= max(swept) else True
    return RunResult(
        "sweep-gressman",
        rows,
        {"c": c, "first_empty_N": first_empty, "first_empty_N_exact": expected, "first_empty_consistent": consistent},
        passed=all(r["verdict"] for r in rows) and consistent,
    )


# ---------------------------------------------------------------- lifting / change of variables


def lifting_check(
    f: ScalarField, omega1: Domain, omega2: Domain, c: float, ps, resolution: Optional[int] = None
) -> RunResult:
    """v(x, y) = u(x) on omega1 x omega2 satisfies the inequality with bound c |omega2|."""
    if omega1.shape != "box" or omega2.shape != "box":
        raise ValueError("lifting_check works on boxes")
    n1 = omega1.dim
    prod = Domain.box(list(omega1.lows) + list(omega2.lows), list(omega1.highs) + list(omega2.highs))
    v = ScalarField(prod.dim, lambda p: f(p[:, :n1]), label=f"lift({f.label})")
    res_v = resolution or default_resolution(prod.dim)
    base = evaluate_inequality(f, omega1, c, ps, res_v, "user", f.label)
    lifted = evaluate_inequality(v, prod, c, ps, res_v, "user", v.label)
    bound = c * omega2.measure
    rows = []
    for b, l in zip(base, lifted):
        factor = b.superlevel * omega2.measure
        tol = max(b.superlevel_outer - b.superlevel_inner, 1e-12) * omega2.measure
        rows.append(
            {
                "p": _fmt_p(b.p),
                "c": c,
                "base_lhs": b.lhs,
                "base_verdict": b.verdict,
                "lifted_lhs": l.lhs,
                "lifted_bound": bound,
                "superlevel_lifted": l.superlevel,
                "superlevel_product": factor,
                "factorizes": abs(l.superlevel - factor) <= tol,
                "verdict": l.lhs_inner >= bound,
            }
        )
    return RunResult(
        "lifting-check",
        rows,
        {"omega2_measure": omega2.measure, "bound": bound},
        passed=all(r["verdict"] and r["factorizes"] for r in rows),
    )


def change_of_variables_check(
    f: ScalarField, omega: Domain, matrix, c: float, ps, resolution: Optional[int] = None
) -> RunResult:
    """For a linear map phi(x) = A x: c <= lhs(u, omega) <= M lhs(u o phi^{-1}, phi(omega)), M = |det A^{-1}|."""
    a = np.asarray(matrix, dtype=float)
    det = float(np.linalg.det(a))
    if abs(det) < 1e-14:
        raise ValueError("singular linear map")
    inv = np.linalg.inv(a)
    M = 1.0 / abs(det)
    image = Domain.linear_image(omega, a)
    g = ScalarField(f.arity, lambda p: f(p @ inv.T), label=f"{f.label}o(phi^-1)")
    res = resolution or default_resolution(omega.dim)
    base = evaluate_inequality(f, omega, c, ps, res, "user", f.label)
    mapped = evaluate_inequality(g, image, c, ps, res, "user", g.label)
    rows = []
    for b, m in zip(base, mapped):
        rows.append(
            {
                "p": _fmt_p(b.p),
                "c": c,
                "M": M,
                "lhs": b.lhs,
                "lhs_mapped": m.lhs,
                "M_times_lhs_mapped": M * m.lhs,
                "relative_gap": abs(M * m.lhs - b.lhs) / b.lhs if b.lhs else 0.0,
                "verdict": b.lhs_inner >= c and M * m.lhs_inner >= c,
            }
        )
    return RunResult(
        "cov-check",
        rows,
        {"det": det, "M": M, "image": image.describe()},
        passed=all(r["verdict"] for r in rows),
    )


# ---------------------------------------------------------------- derivative formulas


DERIVATIVE_TOL = {"ball": 1e-5, "heatball": 1e-4, "modified-heatball": 1e-4}


def verify_derivative_formulas(
    dims=(1, 2, 3),
    heat_dims=(1, 2),
    radii=(0.3, 0.6, 0.9),
    R: float = 1.0,
    quad: Optional[QuadratureConfig] = None,
    fields=None,
) -> RunResult:
    """Closed derivative formulas against centred differences of the averages.

    Relative error for nonzero derivatives; when the formula gives an
    exact zero (Hu = 0) the absolute value of the difference quotient is
    checked against 1e-6 instead.
    """
    quad = quad or QuadratureConfig(radial_points=12, angular_points=12, max_refinements=0)
    rows = []
    jobs = []
    for n in dims:
        centre = (0.3, 0.2, 0.1)[:n]
        for f in fields(n, "ball") if fields else laplace_catalog(n):
            jobs.append(AverageFamily("ball", f, centre, R, quad))
    for n in heat_dims:
        centre = (0.3, 0.2)[:n] + (0.5,)
        for f in fields(n, "heatball") if fields else heat_catalog(n):
            jobs.append(AverageFamily("heatball", f, centre, R, quad))
    for fam in jobs:
        for frac in radii:
            r = frac * R
            formula = float(average_derivative(fam, r))
            fd = finite_difference_derivative(fam, r, 1e-3 * R)
            tol = DERIVATIVE_TOL[fam.kind]
            if formula == 0.0:
                err, mode, tol = abs(fd), "abs", 1e-6
            else:
                err, mode = abs(formula - fd) / abs(formula), "rel"
            rows.append(
                {
                    "kind": fam.kind,
                    "n": fam.n,
                    "field": fam.field.label,
                    "r": r,
                    "formula": formula,
                    "finite_difference": fd,
                    "error": err,
                    "error_mode": mode,
                    "tol": tol,
                    "verdict": err <= tol,
                }
            )
    worst = {}
    for r in rows:
        key = f"{r['kind']}/n={r['n']}/{r['field']}"
        worst[key] = max(worst.get(key, 0.0), r["error"])
    return RunResult("verify-derivatives", rows, {"max_error": worst}, passed=all(r["verdict"] for r in rows))


# ---------------------------------------------------------------- constants / volumes / rectangles


def constants_run(cfg: dict) -> RunResult:
    dom = build_domain(cfg["domain"])
    theorem = cfg.get("theorem", "laplace")
    safety = cfg.get("safety", K.DEFAULT_SAFETY)
    if theorem == "laplace":
        rep = K.laplace_constant(dom, cfg.get("delta"), safety)
    else:
        rep = K.heat_constant(dom, cfg.get("R"), cfg.get("extra_dim", 3), build_quad(cfg.get("quadrature")), safety)
    rows = [{"kind": rep.kind, "term": k, "value": v, "c": rep.c, "verdict": rep.c < v} for k, v in rep.terms.items()]
    return RunResult("constants", rows, rep.to_dict(), passed=rep.satisfies_strictness())


def heatball_volume_run(cfg: dict) -> RunResult:
    quad = build_quad(cfg.get("quadrature"))
    rows = []
    for n in cfg.get("dims", [1, 2, 3]):
        unit = heatball_volume(HeatballSpec((0.0,) * (n + 1), 1.0), quad)
        for r in cfg.get("radii", [0.5, 1.0, 2.0]):
            vol = heatball_volume(HeatballSpec((0.0,) * (n + 1), r), quad)
            ratio = vol / unit
            rows.append(
                {
                    "n": n,
                    "r": r,
                    "volume": vol,
                    "ratio": ratio,
                    "scaling": r ** (n + 2),
                    "rel_error": abs(ratio / r ** (n + 2) - 1.0),
                    "verdict": abs(ratio / r ** (n + 2) - 1.0) <= 1e-6,
                }
            )
    return RunResult("heatball-volume", rows, {}, passed=all(r["verdict"] for r in rows))


def rectangle_demo(delta: float) -> RunResult:
    fam = make_rectangle_family(delta)
    rects = fam.rectangles
    gap = delta * delta / 4.0
    rows = []
    for i, ((x0, x1), (y0, y1)) in enumerate(rects, start=1):
        next_gap = rects[i][1][0] - y1 if i < len(rects) else None
        rows.append(
            {
                "index": i,
                "x0": x0,
                "x1": x1,
                "y0": y0,
                "y1": y1,
                "gap_to_next": next_gap,
                "verdict": 0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0
                and (next_gap is None or abs(next_gap - gap) <= 1e-12),
            }
        )
    summary = {
        "delta": delta,
        "count": fam.count,
        "measure": fam.measure,
        "measure_bound": 1.0 - 2.0 * delta,
        "measure_exceeds_bound": fam.measure > 1.0 - 2.0 * delta,
        "approximation_budget": 2.0 * delta + delta * delta / 8.0,
        "top": fam.top,
        "top_below_1_minus_delta_over_4": fam.top <= 1.0 - delta / 4.0,
        "gap": gap,
    }
    return RunResult(
        "rectangle-demo",
        rows,
        summary,
        passed=all(r["verdict"] for r in rows) and summary["measure_exceeds_bound"],
    )
