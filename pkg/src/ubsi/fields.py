"""Analytic scalar fields with closed-form operator values.

Every evaluator is vectorised: it takes an ``(N, d)`` array of points and
returns ``(N,)`` values. Space-time fields put time in the last column.

Operators:

* ``laplacian``  sum of second derivatives in all (spatial) coordinates;
* ``heat``       H u = Laplacian in x minus d/dt;
* ``dethess``    D u = (u_xy)^2 - u_xx u_yy, i.e. *minus* the Hessian
  determinant. This is the sign under which the Gressman family has
  D u_N = e^{2x} >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

OPERATORS = ("laplacian", "heat", "dethess")


@dataclass(frozen=True)
class ScalarField:
    arity: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    analytic_laplacian: Optional[Callable] = None
    analytic_heat: Optional[Callable] = None
    analytic_dethess: Optional[Callable] = None
    label: str = ""
    params: dict = field(default_factory=dict)
    spacetime: bool = False

    def __call__(self, points) -> np.ndarray:
        p = _as_points(points, self.arity)
        return np.asarray(self.evaluator(p), dtype=float)

    @property
    def spatial_dim(self) -> int:
        return self.arity - 1 if self.spacetime else self.arity

    def analytic(self, op: str) -> Optional[Callable]:
        if op not in OPERATORS:
            raise ValueError(f"unknown operator {op!r}")
        return getattr(self, f"analytic_{op}")

    def operator(self, op: str, points, h: Optional[float] = None) -> tuple[np.ndarray, bool]:
        """Operator values at ``points``; second item is True when finite differences were used."""
        p = _as_points(points, self.arity)
        exact = self.analytic(op)
        if exact is not None:
            return np.asarray(exact(p), dtype=float) * np.ones(len(p)), False
        return finite_difference_operator(self, op, p, h), True

    def shifted(self, c0: float) -> "ScalarField":
        """u - c0; operator values are unchanged."""
        ev = self.evaluator
        return replace(
            self,
            evaluator=lambda p: ev(p) - c0,
            label=f"{self.label}-({c0:g})",
            params={**self.params, "shift": c0},
        )

    def scaled(self, a: float) -> "ScalarField":
        ev = self.evaluator

        def wrap(fn):
            return None if fn is None else (lambda p: a * np.asarray(fn(p)))

        return ScalarField(
            self.arity,
            lambda p: a * ev(p),
            wrap(self.analytic_laplacian),
            wrap(self.analytic_heat),
            None if self.analytic_dethess is None else (lambda p: a * a * self.analytic_dethess(p)),
            label=f"{a:g}*{self.label}",
            params={**self.params, "scale": a},
            spacetime=self.spacetime,
        )

    def without_analytic(self) -> "ScalarField":
        return replace(self, analytic_laplacian=None, analytic_heat=None, analytic_dethess=None)


def _as_points(points, arity: int) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1, 1)
    elif p.ndim == 1:
        p = p.reshape(-1, arity) if arity > 1 or p.size == 1 else p.reshape(-1, 1)
    if p.shape[1] != arity:
        raise ValueError(f"expected points with {arity} coordinates, got shape {p.shape}")
    return p


def _sq(p):
    return np.sum(p * p, axis=1)


def constant(value: float, arity: int, spacetime: bool = False) -> ScalarField:
    zero = lambda p: np.zeros(len(p))
    return ScalarField(
        arity,
        lambda p: np.full(len(p), float(value)),
        zero,
        zero if spacetime else None,
        zero if arity == 2 else None,
        label=f"const({value:g})",
        params={"value": value},
        spacetime=spacetime,
    )


# ---------------------------------------------------------------- Laplacian catalog


def make_quadratic(n: int) -> ScalarField:
    """|x|^2 / 2n, the canonical field with Laplacian identically 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return ScalarField(
        n,
        lambda p: _sq(p) / (2 * n),
        lambda p: np.ones(len(p)),
        label="quadratic",
        params={"n": n},
    )


_HARMONIC = {
    # name: (value, needs n >= 2); for n = 1 every choice degrades to x_1
    "xy": lambda p: p[:, 0] * p[:, 1],
    "saddle": lambda p: p[:, 0] ** 2 - p[:, 1] ** 2,
    "exp_cos": lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1]),
    "linear": lambda p: np.sum(p, axis=1),
}


def make_harmonic_perturbation(n: int, kind: str = "xy", amplitude: float = 1.0) -> ScalarField:
    """|x|^2/2n plus a harmonic term; Laplacian stays identically 1."""
    if kind not in _HARMONIC:
        raise ValueError(f"unknown harmonic kind {kind!r}")
    h = _HARMONIC[kind] if (n >= 2 or kind == "linear") else (lambda p: p[:, 0])
    return ScalarField(
        n,
        lambda p: _sq(p) / (2 * n) + amplitude * h(p),
        lambda p: np.ones(len(p)),
        label=f"quadratic+{amplitude:g}*{kind}",
        params={"n": n, "kind": kind, "amplitude": amplitude},
    )


def make_quartic(n: int) -> ScalarField:
    return ScalarField(
        n,
        lambda p: _sq(p) ** 2,
        lambda p: 4.0 * (n + 2) * _sq(p),
        label="quartic",
        params={"n": n},
    )


def make_exp_sum(n: int, a: float = 1.5) -> ScalarField:
    return ScalarField(
        n,
        lambda p: np.sum(np.exp(a * p), axis=1),
        lambda p: a * a * np.sum(np.exp(a * p), axis=1),
        label=f"exp_sum(a={a:g})",
        params={"n": n, "a": a},
    )


def make_cosh_sum(n: int) -> ScalarField:
    return ScalarField(
        n,
        lambda p: np.sum(np.cosh(p), axis=1),
        lambda p: np.sum(np.cosh(p), axis=1),
        label="cosh_sum",
        params={"n": n},
    )


def make_sine_bump(n: int) -> ScalarField:
    return ScalarField(
        n,
        lambda p: _sq(p) + np.sin(p[:, 0]),
        lambda p: 2.0 * n - np.sin(p[:, 0]),
        label="sine_bump",
        params={"n": n},
    )


def make_cubic(n: int) -> ScalarField:
    return ScalarField(
        n,
        lambda p: p[:, 0] ** 3 + _sq(p),
        lambda p: 6.0 * p[:, 0] + 2.0 * n,
        label="cubic",
        params={"n": n},
    )


def make_gaussian_growth(n: int) -> ScalarField:
    return ScalarField(
        n,
        lambda p: np.exp(0.5 * _sq(p)),
        lambda p: (n + _sq(p)) * np.exp(0.5 * _sq(p)),
        label="gaussian_growth",
        params={"n": n},
    )


def laplace_catalog(n: int) -> list[ScalarField]:
    """The ten Laplacian test fields used by the derivative-formula checks."""
    return [
        make_quadratic(n),
        make_quadratic(n).shifted(3.0),
        make_harmonic_perturbation(n, "xy", 0.7),
        make_harmonic_perturbation(n, "exp_cos", 0.5),
        make_quartic(n),
        make_exp_sum(n),
        make_cosh_sum(n),
        make_sine_bump(n),
        make_cubic(n),
        make_gaussian_growth(n),
    ]


# ---------------------------------------------------------------- heat catalog


def make_heat_witness(n: int, kind: str = "drift", c0: float = 0.0) -> ScalarField:
    """Space-time fields on R^{n+1}.

    drift: -t (Hu = 1); caloric: |x|^2/2n + t (Hu = 0); shifted: -t + c0 (Hu = 1).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    one = lambda p: np.ones(len(p))
    zero = lambda p: np.zeros(len(p))
    if kind == "drift":
        return ScalarField(n + 1, lambda p: -p[:, -1], analytic_heat=one, label="drift", params={"n": n}, spacetime=True)
    if kind == "caloric":
        return ScalarField(
            n + 1,
            lambda p: _sq(p[:, :-1]) / (2 * n) + p[:, -1],
            analytic_heat=zero,
            label="caloric",
            params={"n": n},
            spacetime=True,
        )
    if kind == "shifted":
        return ScalarField(
            n + 1,
            lambda p: -p[:, -1] + c0,
            analytic_heat=one,
            label=f"drift+({c0:g})",
            params={"n": n, "c0": c0},
            spacetime=True,
        )
    raise ValueError(f"unknown heat witness {kind!r}")


def make_drift_caloric(n: int, a: float = 0.5, b: float = 0.3) -> ScalarField:
    """-t + a(|x|^2/2n + t) + b sin(x_1) e^{-t}; the added parts are temperatures, so Hu = 1."""
    return ScalarField(
        n + 1,
        lambda p: -p[:, -1] + a * (_sq(p[:, :-1]) / (2 * n) + p[:, -1]) + b * np.sin(p[:, 0]) * np.exp(-p[:, -1]),
        analytic_heat=lambda p: np.ones(len(p)),
        label=f"drift+caloric(a={a:g},b={b:g})",
        params={"n": n, "a": a, "b": b},
        spacetime=True,
    )


def make_exp_heat(n: int, a: float = 1.0, b: float = 0.5) -> ScalarField:
    """e^{a x_1 + b t}; Hu = (a^2 - b) u."""
    f = lambda p: np.exp(a * p[:, 0] + b * p[:, -1])
    return ScalarField(
        n + 1,
        f,
        analytic_heat=lambda p: (a * a - b) * f(p),
        label=f"exp_heat(a={a:g},b={b:g})",
        params={"n": n, "a": a, "b": b},
        spacetime=True,
    )


def make_mixed_heat(n: int) -> ScalarField:
    """x_1^2 t + |x|^2/2n - t; Hu = 2t - x_1^2 + 2."""
    return ScalarField(
        n + 1,
        lambda p: p[:, 0] ** 2 * p[:, -1] + _sq(p[:, :-1]) / (2 * n) - p[:, -1],
        analytic_heat=lambda p: 2.0 * p[:, -1] - p[:, 0] ** 2 + 2.0,
        label="mixed_heat",
        params={"n": n},
        spacetime=True,
    )


def heat_catalog(n: int) -> list[ScalarField]:
    return [
        make_heat_witness(n, "drift"),
        make_heat_witness(n, "caloric"),
        make_heat_witness(n, "shifted", 5.0),
        make_drift_caloric(n),
        make_exp_heat(n),
        make_mixed_heat(n),
    ]


def lift(f: ScalarField, m: int) -> ScalarField:
    """Extend a space-time field on R^{n+1} to R^{m+n+1}, constant in the m new (leading) variables."""
    if not f.spacetime:
        raise ValueError("lift expects a space-time field")
    ev = f.evaluator
    heat = f.analytic_heat
    return ScalarField(
        f.arity + m,
        lambda p: ev(p[:, m:]),
        analytic_heat=None if heat is None else (lambda p: heat(p[:, m:])),
        label=f"lift{m}({f.label})",
        params={**f.params, "lifted": m},
        spacetime=True,
    )


# ---------------------------------------------------------------- det-Hessian


def make_gressman(N: int) -> ScalarField:
    """u_N(x, y) = e^x sin(N y) / N, with D u_N = e^{2x}."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return ScalarField(
        2,
        lambda p: np.exp(p[:, 0]) * np.sin(N * p[:, 1]) / N,
        analytic_laplacian=lambda p: np.exp(p[:, 0]) * np.sin(N * p[:, 1]) * (1.0 / N - N),
        analytic_dethess=lambda p: np.exp(2.0 * p[:, 0]),
        label=f"gressman(N={N})",
        params={"N": N},
    )


# ---------------------------------------------------------------- rectangles


@dataclass(frozen=True)
class RectangleFamily:
    delta: float
    rectangles: tuple
    measure: float

    @property
    def count(self) -> int:
        return len(self.rectangles)

    @property
    def top(self) -> float:
        return self.rectangles[-1][1][1] if self.rectangles else 0.0


def rectangle_count(delta: float) -> int:
    return math.floor((4.0 - delta * delta) / (4.0 * delta + delta * delta))


def make_rectangle_family(delta: float) -> RectangleFamily:
    """Disjoint thin rectangles [d/4, 1-d/4] x [i(d+d^2/4)-d, i(d+d^2/4)] covering most of [0,1]^2."""
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    k = rectangle_count(delta)
    pitch = delta + delta * delta / 4.0
    rects = tuple(
        ((delta / 4.0, 1.0 - delta / 4.0), (i * pitch - delta, i * pitch)) for i in range(1, k + 1)
    )
    measure = delta * (1.0 - delta / 2.0) * k
    return RectangleFamily(delta, rects, measure)


# ---------------------------------------------------------------- finite differences


def default_step(points) -> np.ndarray:
    p = np.atleast_2d(points)
    return 1e-4 * (1.0 + np.linalg.norm(p, axis=1))


def finite_difference_operator(f, op: str, points, h=None) -> np.ndarray:
    """Centred second-order differences for the three operators.

    ``h`` is a scalar or per-point array; the default scales with |point|.
    """
    arity = f.arity if isinstance(f, ScalarField) else np.atleast_2d(points).shape[1]
    p = _as_points(points, arity)
    h = default_step(p) if h is None else np.broadcast_to(np.asarray(h, dtype=float), (len(p),))
    hh = h[:, None]
    f0 = f(p)
    d = p.shape[1]

    def second(axis):
        e = np.zeros(d)
        e[axis] = 1.0
        return (f(p + hh * e) - 2.0 * f0 + f(p - hh * e)) / h**2

    if op == "laplacian":
        spatial = d - 1 if (isinstance(f, ScalarField) and f.spacetime) else d
        return sum(second(i) for i in range(spatial))
    if op == "heat":
        e = np.zeros(d)
        e[-1] = 1.0
        dt = (f(p + hh * e) - f(p - hh * e)) / (2.0 * h)
        return sum(second(i) for i in range(d - 1)) - dt
    if op == "dethess":
        if d != 2:
            raise ValueError("dethess is defined on R^2")
        ex, ey = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        fxy = (
            f(p + hh * (ex + ey)) - f(p + hh * (ex - ey)) - f(p - hh * (ex - ey)) + f(p - hh * (ex + ey))
        ) / (4.0 * h**2)
        return fxy**2 - second(0) * second(1)
    raise ValueError(f"unknown operator {op!r}")


# ---------------------------------------------------------------- registry for configs


def _laplace_family(name):
    return {
        "quadratic": lambda n=2: make_quadratic(n),
        "harmonic_perturbation": lambda n=2, kind="xy", amplitude=1.0: make_harmonic_perturbation(n, kind, amplitude),
        "quartic": lambda n=2: make_quartic(n),
        "exp_sum": lambda n=2, a=1.5: make_exp_sum(n, a),
        "cosh_sum": lambda n=2: make_cosh_sum(n),
        "sine_bump": lambda n=2: make_sine_bump(n),
        "cubic": lambda n=2: make_cubic(n),
        "gaussian_growth": lambda n=2: make_gaussian_growth(n),
    }.get(name)


FAMILIES = (
    "quadratic",
    "harmonic_perturbation",
    "quartic",
    "exp_sum",
    "cosh_sum",
    "sine_bump",
    "cubic",
    "gaussian_growth",
    "drift",
    "caloric",
    "shifted_drift",
    "drift_caloric",
    "exp_heat",
    "mixed_heat",
    "gressman",
)


def make_field(family: str, params: Optional[dict] = None) -> ScalarField:
    """Build a catalog field from a name and parameter map (the CLI config form).

    A ``shift`` parameter subtracts a constant from any family.
    """
    params = dict(params or {})
    shift = params.pop("shift", None)
    n = int(params.pop("n", 2))
    try:
        f = _build(family, n, params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family!r}: {exc}") from None
    return f.shifted(float(shift)) if shift is not None else f


def _build(family: str, n: int, params: dict) -> ScalarField:
    builder = _laplace_family(family)
    if builder is not None:
        return builder(n=n, **params)
    if family == "drift":
        return _no_params(params) or make_heat_witness(n, "drift")
    if family == "caloric":
        return _no_params(params) or make_heat_witness(n, "caloric")
    if family == "shifted_drift":
        return (lambda c0=0.0: make_heat_witness(n, "shifted", float(c0)))(**params)
    if family == "drift_caloric":
        return make_drift_caloric(n, **params)
    if family == "exp_heat":
        return make_exp_heat(n, **params)
    if family == "mixed_heat":
        return _no_params(params) or make_mixed_heat(n)
    if family == "gressman":
        return (lambda N=1: make_gressman(int(N)))(**params)
    raise ValueError(f"unknown field family {family!r}; known: {', '.join(FAMILIES)}")


def _no_params(params: dict):
    if params:
        raise TypeError(f"unexpected parameters {sorted(params)}")
    return None
