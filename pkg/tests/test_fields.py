import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caloric.errors import MalformedSpec, OutsideValidity
from caloric.fields import (Catalogue, Constant, Exponential, HeatPolynomial, RationalHeatSolution,
                            ShiftedField, SumField, Trig, gradient_fd, heat_polynomial_1d,
                            heat_residual_fd, kernel_pole, make_field, time_derivative_fd)
from caloric.grids import box_grid
from caloric.kernel import DerivativeOrder, SpacetimePoint, phi


def test_heat_polynomial_values():
    f = HeatPolynomial([2])
    assert f.value(0.5, [1.5]) == pytest.approx(1.5 ** 2 + 1.0)
    assert heat_polynomial_1d(4, 1.0, 1.0) == pytest.approx(1 + 12 + 12)
    assert heat_polynomial_1d(3, 2.0, 0.5) == pytest.approx(8 + 6 * 2 * 0.5)


def test_exponential_value():
    f = Exponential([1.0])
    assert f.value(0.3, [0.2]) == pytest.approx(math.exp(0.5))


def test_kernel_pole_equals_phi():
    f = kernel_pole(SpacetimePoint(0.0, (0.0,)))
    t, x = box_grid([0.1, -2], [2, 2], [7, 9])
    assert np.allclose(f.value(t, x), phi(t, x), rtol=1e-14, atol=0)


def test_residual_oracle_examples():
    assert abs(heat_residual_fd(HeatPolynomial([2]), 0.7, [0.3], 1e-3)) < 1e-9
    assert heat_residual_fd(Constant(5.0), 0.2, [1.0]) == 0.0
    f = kernel_pole(SpacetimePoint(0.0, (0.0,)))
    r1 = heat_residual_fd(f, 1.0, [1.0], 1e-3)
    r2 = heat_residual_fd(f, 1.0, [1.0], 5e-4)
    assert abs(r1) <= 1e-5
    # second-order truncation: halving h cuts the residual about fourfold
    assert abs(r2) <= 0.3 * abs(r1) + 1e-12


def test_residual_oracle_rejects_pole_in_stencil():
    f = kernel_pole(SpacetimePoint(0.0, (0.0,)))
    with pytest.raises(OutsideValidity):
        heat_residual_fd(f, 1e-3, [0.0], 1e-3)


@pytest.mark.parametrize("n", [1, 2])
def test_catalogue_members_are_caloric(n):
    cat = Catalogue.default(n)
    rng = np.random.default_rng(3)
    for name, f in cat.members.items():
        t = rng.uniform(-0.5, 0.5, 5)
        x = rng.uniform(-1, 1, (5, n))
        r1 = np.abs(heat_residual_fd(f, t, x, 1e-1))
        r2 = np.abs(heat_residual_fd(f, t, x, 5e-2))
        assert np.all(r2 <= 0.3 * r1 + 1e-9), name


@pytest.mark.parametrize("f", [Exponential([0.4, -0.3]), Trig([1.1, 0.5], "sin"),
                               HeatPolynomial([2, 1]),
                               kernel_pole(SpacetimePoint(-1.0, (0.2, -0.1)), 1.5,
                                           DerivativeOrder(1, (1, 0)))])
def test_analytic_derivatives(f):
    t = np.array([0.1, 0.4])
    x = np.array([[0.3, -0.2], [1.0, 0.5]])
    assert np.allclose(f.gradient(t, x), gradient_fd(f, t, x), rtol=1e-6, atol=1e-8)
    assert np.allclose(f.time_derivative(t, x), time_derivative_fd(f, t, x), rtol=1e-6, atol=1e-8)


def test_algebra():
    a, b = Exponential([0.5]), Trig([1.0])
    t, x = 0.3, [0.7]
    assert (a + b).value(t, x) == pytest.approx(a.value(t, x) + b.value(t, x))
    assert (a - b).value(t, x) == pytest.approx(a.value(t, x) - b.value(t, x))
    assert (-a).value(t, x) == pytest.approx(-a.value(t, x))
    assert a.scaled(3).value(t, x) == pytest.approx(3 * a.value(t, x))


def test_shifted_field():
    f = ShiftedField(HeatPolynomial([2]), [1.0, 2.0])
    assert f.value(1.5, [2.5]) == pytest.approx(0.5 ** 2 + 2 * 0.5)


def test_rational_validity_and_json():
    sol = RationalHeatSolution.from_arrays([-1.0, 0.0], [[0.0], [1.0]], [1.0, -2.0])
    assert not sol.is_valid(0.0, [1.0])
    assert sol.is_valid(0.0, [1.1])
    back = make_field(sol.to_json())
    t, x = box_grid([0.1, -1], [1, 2], 5)
    assert np.array_equal(back.value(t, x), sol.value(t, x))
    assert len(back) == 2
    assert back.poles.shape == (2, 2)


@pytest.mark.parametrize("spec", [
    {"type": "exponential", "k": [0.3]},
    {"type": "trig", "k": [1.0, 2.0], "phase": "sin"},
    {"type": "heat_polynomial", "degree": [3]},
    {"type": "constant", "value": 2.5, "n": 2},
    {"type": "kernel", "pole": {"t": -1.0, "x": [0.5]}, "coeff": 2.0, "j": 1, "alpha": [1]},
    {"type": "sum", "terms": [{"type": "exponential", "k": [1.0]}, {"type": "constant", "value": 1.0}],
     "weights": [2.0, -1.0]},
    {"type": "shifted", "base": {"type": "heat_polynomial", "degree": [2]}, "shift": [0.5, 1.0]},
])
def test_json_roundtrip(spec):
    f = make_field(spec)
    g = make_field(f.to_json())
    t = np.array([0.2, 0.9])
    x = np.full((2, f.n), 0.4)
    assert np.array_equal(f.value(t, x), g.value(t, x))


@pytest.mark.parametrize("spec", [{"type": "nope"}, {"type": "trig"}, [1, 2],
                                  {"type": "kernel", "pole": {"t": 0}}])
def test_malformed_specs(spec):
    with pytest.raises(MalformedSpec):
        make_field(spec)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.floats(-2, 2), st.floats(0.05, 2))
def test_heat_polynomials_satisfy_recurrence(d, x, t):
    # d/dx of v_d is d * v_{d-1}
    h = 1e-5
    if d == 0:
        return
    fd = (heat_polynomial_1d(d, x + h, t) - heat_polynomial_1d(d, x - h, t)) / (2 * h)
    assert fd == pytest.approx(d * heat_polynomial_1d(d - 1, x, t), rel=1e-5, abs=1e-5)


def test_sum_field_weights_must_match():
    with pytest.raises((ValueError, MalformedSpec)):
        SumField([Constant(1.0)], [1.0, 2.0])
