import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ubsi.averages import (
    AverageFamily,
    DegradedAccuracyWarning,
    average,
    average_derivative,
    ball_average,
    ball_average_derivative,
    center_value,
    finite_difference_derivative,
    heatball_average,
    heatball_average_derivative,
    lifted_heatball_average,
    modified_heatball_average,
    reconstruct_center_value,
)
from ubsi.constants import laplace_cn
from ubsi.fields import (
    constant,
    heat_catalog,
    laplace_catalog,
    make_drift_caloric,
    make_exp_heat,
    make_heat_witness,
    make_quadratic,
)
from ubsi.geometry import Domain
from ubsi.quadrature import QuadratureConfig

FIXED = QuadratureConfig(radial_points=12, angular_points=12, max_refinements=0)
FIXED_4D = QuadratureConfig(angular_points=8, max_refinements=0)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
def test_unit_laplacian_gives_cn_times_r(n, r):
    fam = AverageFamily("ball", make_quadratic(n), (0.1,) * n, 2.0)
    assert ball_average_derivative(fam, r) == pytest.approx(laplace_cn(n) * r, abs=1e-12)
    # the ball average of |x|^2/2n about c is |c|^2/2n + r^2/(2(n+2))
    assert ball_average(fam, r) == pytest.approx(n * 0.01 / (2 * n) + r * r / (2 * (n + 2)), rel=1e-12)


def test_constant_field_has_flat_averages():
    fam = AverageFamily("ball", constant(3.0, 2), (0.0, 0.0), 1.0)
    assert ball_average(fam, 0.4) == pytest.approx(3.0)
    assert ball_average_derivative(fam, 0.4) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ball_derivative_matches_finite_difference(n):
    for f in laplace_catalog(n):
        fam = AverageFamily("ball", f, (0.3, 0.2, 0.1)[:n], 1.0, FIXED)
        for r in (0.3, 0.6, 0.9):
            exact = ball_average_derivative(fam, r)
            fd = finite_difference_derivative(fam, r)
            assert abs(exact - fd) <= 1e-5 * abs(exact), f.label


@pytest.mark.parametrize("n", [1, 2])
def test_heat_derivative_matches_finite_difference(n):
    for f in heat_catalog(n):
        fam = AverageFamily("heatball", f, (0.3, 0.2)[:n] + (0.5,), 1.0)
        for r in (0.3, 0.6, 0.9):
            exact = heatball_average_derivative(fam, r)
            fd = finite_difference_derivative(fam, r)
            if exact == 0.0:
                assert abs(fd) < 1e-6
            else:
                assert abs(exact - fd) <= 1e-4 * abs(exact), f.label


@pytest.mark.parametrize("n", [1, 2])
def test_caloric_average_is_constant(n):
    fam = AverageFamily("heatball", make_heat_witness(n, "caloric"), (0.2,) * n + (0.7,), 1.0)
    for r in (0.2, 0.5, 1.0):
        assert heatball_average(fam, r) == pytest.approx(center_value(fam), abs=1e-9)
    assert heatball_average_derivative(fam, 0.5) == 0.0


def test_drift_witness_average_exceeds_centre_value():
    # Hu = 1 makes phi increasing from phi(0) = u(x, t)
    fam = AverageFamily("heatball", make_heat_witness(1, "drift"), (0.0, 1.0), 1.0)
    assert heatball_average(fam, 0.5) > center_value(fam)
    assert heatball_average_derivative(fam, 0.5) > 0


@pytest.mark.parametrize("kind,field", [("ball", make_quadratic(2)), ("ball", laplace_catalog(3)[5]), ("heatball", make_drift_caloric(1)), ("heatball", make_exp_heat(2))])
def test_fundamental_theorem_reconstruction(kind, field):
    centre = (0.2,) * field.arity if kind == "ball" else (0.2,) * (field.arity - 1) + (0.5,)
    fam = AverageFamily(kind, field, centre, 0.8)
    u = center_value(fam)
    assert reconstruct_center_value(fam) == pytest.approx(u, rel=1e-4, abs=1e-8)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_monotone_under_unit_laplacian(a, b):
    r1, r2 = sorted((a, b))
    n = 2
    for f in laplace_catalog(n)[:4]:
        fam = AverageFamily("ball", f, (0.1, -0.2), 1.0)
        gap = ball_average(fam, r2) - ball_average(fam, r1)
        assert gap >= laplace_cn(n) * (r2 * r2 - r1 * r1) / 2 - 1e-12


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.3, 1.0))
def test_modified_average_equals_lifted(a, b, r):
    f = make_drift_caloric(1, a, b)
    fam = AverageFamily("modified-heatball", f, (0.1, 0.4), 1.0, FIXED_4D, extra_dim=3)
    assert modified_heatball_average(fam, r) == pytest.approx(lifted_heatball_average(fam, r), rel=1e-6, abs=1e-12)


def test_modified_derivative_matches_finite_difference():
    f = make_exp_heat(1)
    fam = AverageFamily("modified-heatball", f, (0.1, 0.4), 1.0, FIXED_4D, extra_dim=3)
    for r in (0.4, 0.8):
        exact = average_derivative(fam, r)
        fd = finite_difference_derivative(fam, r)
        assert abs(exact - fd) <= 1e-4 * abs(exact)


def test_degraded_flag_and_warning():
    f = make_quadratic(2).without_analytic()
    fam = AverageFamily("ball", f, (0.0, 0.0), 1.0)
    with pytest.warns(DegradedAccuracyWarning):
        d = ball_average_derivative(fam, 0.5)
    assert d.degraded and d == pytest.approx(0.5 / 4, rel=1e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not ball_average_derivative(AverageFamily("ball", make_quadratic(2), (0.0, 0.0), 1.0), 0.5).degraded


def test_family_validation():
    with pytest.raises(ValueError):
        AverageFamily("ball", make_quadratic(2), (0.0,), 1.0)
    with pytest.raises(ValueError):
        AverageFamily("heatball", make_quadratic(2), (0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        AverageFamily("modified-heatball", make_drift_caloric(1), (0.0, 0.0), 1.0, extra_dim=2)
    with pytest.raises(ValueError):
        AverageFamily("ball", make_quadratic(2), (0.5, 0.5), 0.6, domain=Domain.unit_box(2))
    fam = AverageFamily("ball", make_quadratic(2), (0.5, 0.5), 0.4, domain=Domain.unit_box(2))
    with pytest.raises(ValueError):
        average(fam, 0.5)
    with pytest.raises(ValueError):
        average_derivative(fam, 0.4)  # derivative needs r < R
