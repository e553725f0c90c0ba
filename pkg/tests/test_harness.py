import math

import numpy as np
import pytest

from ubsi import harness as H
from ubsi.fields import make_field, make_quadratic
from ubsi.geometry import Domain

BOX2 = {"shape": "box", "lows": [0, 0], "highs": [1, 1]}


def test_check_inequality_quadratic_shared_c():
    res = H.check_inequality({"field": {"family": "quadratic", "params": {"n": 2}}, "domain": BOX2})
    assert res.passed
    assert [r["p"] for r in res.rows] == [1.0, 2.0, 4.0, "inf"]
    assert len({r["c"] for r in res.rows}) == 1 and res.summary["shared_c"]
    assert res.summary["c_provenance"] == "constants.laplace_constant"
    assert res.summary["hypothesis"]["min_value"] >= 1.0


def test_verdict_recomputable_from_row():
    res = H.check_inequality({"field": {"family": "quadratic", "params": {"n": 2}}, "domain": BOX2, "c": 0.3})
    for row in res.rows:
        p = math.inf if row["p"] == "inf" else row["p"]
        q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
        ind = (1.0 if row["superlevel_inner"] > 0 else 0.0) if math.isinf(q) else row["superlevel_inner"] ** (1 / q)
        assert row["verdict"] == (row["lp_norm"] * ind >= row["c"])
        assert row["c_provenance"] == "user"


def test_hypothesis_violation_refuses_run():
    cfg = {"field": {"family": "gressman", "params": {"N": 3}}, "domain": BOX2, "theorem": "laplace"}
    with pytest.raises(H.HypothesisViolation) as exc:
        H.check_inequality(cfg)
    assert exc.value.value < 1 and len(exc.value.point) == 2


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        H.check_inequality({"field": {"family": "quadratic", "params": {"n": 3}}, "domain": BOX2})


@pytest.mark.parametrize("family,params", [("drift", {"n": 1}), ("shifted_drift", {"n": 1, "c0": 100.0})])
def test_check_inequality_heat(family, params):
    res = H.check_inequality({"field": {"family": family, "params": params}, "domain": BOX2, "p": [1, 2, "inf"]})
    assert res.passed and res.summary["theorem"] == "heat"
    assert res.summary["c_provenance"] == "constants.heat_constant"


def test_large_shift_passes_trivially():
    res = H.check_inequality({"field": {"family": "quadratic", "params": {"n": 2, "shift": -1000.0}}, "domain": BOX2})
    assert res.passed and all(r["superlevel"] == pytest.approx(1.0) for r in res.rows)


@pytest.mark.parametrize("c,lo,hi,expected", [(0.1, 20, 32, 28), (0.01, 265, 278, 272)])
def test_counterexample_sweep(c, lo, hi, expected):
    res = H.counterexample_sweep(c, range(lo, hi + 1))
    assert res.summary["first_empty_N"] == expected == res.summary["first_empty_N_exact"]
    assert res.passed
    for row in res.rows:
        assert row["dethess_min"] >= 1.0
        assert row["empty"] == (row["N"] >= expected)
        assert row["sup_grid"] == pytest.approx(row["sup_exact"], rel=1e-6)
        if row["empty"]:
            assert row["lhs"] == 0.0


def test_gressman_sup_first_member():
    assert H.gressman_sup(1) == pytest.approx(math.e * math.sin(1))
    with pytest.raises(ValueError):
        H.counterexample_sweep(0.0, [1])


@pytest.mark.parametrize("length", [1.0, 2.0])
def test_lifting_check(length):
    res = H.lifting_check(make_quadratic(2), Domain.unit_box(2), Domain.box([0], [length]), 0.05, [1, 2, math.inf], 48)
    assert res.passed
    assert res.summary["bound"] == pytest.approx(0.05 * length)
    for row in res.rows:
        assert row["factorizes"] and row["base_verdict"]


def test_change_of_variables_identity_and_scaling():
    f = make_quadratic(2)
    ident = H.change_of_variables_check(f, Domain.unit_box(2), np.eye(2), 0.01, [1, 2, math.inf], 128)
    for row in ident.rows:
        assert row["lhs"] == row["lhs_mapped"] and row["M"] == 1.0
    double = H.change_of_variables_check(f, Domain.unit_box(2), 2 * np.eye(2), 0.01, [1, 2, math.inf], 128)
    assert double.summary["M"] == 0.25 and double.passed
    for row in double.rows:
        assert row["c"] <= row["M_times_lhs_mapped"]
        assert row["relative_gap"] < 1e-9


def test_change_of_variables_rotation_and_singular():
    th = 0.3
    rot = [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]
    res = H.change_of_variables_check(make_quadratic(2), Domain.unit_box(2), rot, 0.01, [1, 2, math.inf], 256)
    assert res.passed
    for row in res.rows:
        assert row["relative_gap"] < 2e-2
    with pytest.raises(ValueError):
        H.change_of_variables_check(make_quadratic(2), Domain.unit_box(2), [[1, 2], [2, 4]], 0.01, [2])


def test_verify_derivatives_examples():
    res = H.verify_derivative_formulas(dims=(2,), heat_dims=(1,))
    rows = {(r["kind"], r["field"], r["r"]): r for r in res.rows}
    assert res.passed
    assert all(rows[("ball", "quadratic", r)]["error"] < 1e-6 for r in (0.3, 0.6, 0.9))
    for r in (0.3, 0.6, 0.9):
        assert rows[("heatball", "caloric", r)]["error_mode"] == "abs"
        assert rows[("heatball", "caloric", r)]["error"] < 1e-6
        assert rows[("heatball", "drift", r)]["error"] < 1e-4


def test_rectangle_demo_examples():
    res = H.rectangle_demo(0.05)
    assert res.summary["approximation_budget"] == pytest.approx(0.1003125, abs=1e-15)
    assert res.passed
    assert H.rectangle_demo(0.1).summary["measure"] > 0.8


def test_constants_and_volume_runs():
    assert H.constants_run({"domain": BOX2}).passed
    heat = H.constants_run({"domain": BOX2, "theorem": "heat"})
    assert heat.passed and heat.summary["kind"] == "heat"
    assert H.heatball_volume_run({"dims": [1, 2], "radii": [0.5, 2.0]}).passed


def test_parse_p():
    assert H.parse_p([1, "inf", 2.5]) == [1.0, math.inf, 2.5]
    with pytest.raises(ValueError):
        H.parse_p([0.5])
