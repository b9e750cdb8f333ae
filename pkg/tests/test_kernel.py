import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from caloric.errors import OrderTooHigh
from caloric.kernel import (DerivativeOrder, SpacetimePoint, kernel_matrix, phi,
                            phi_derivative)

FOUR_PI = 4 * math.pi


def gauss_mass_2d(t, nodes=300):
    """Tensor Gauss-Legendre integral of the n = 2 kernel over a box holding all its mass."""
    half = 12 * math.sqrt(t) + 4
    z, w = np.polynomial.legendre.leggauss(nodes)
    z, w = z * half, w * half
    zz1, zz2 = np.meshgrid(z, z, indexing="ij")
    vals = phi(np.full(zz1.size, t), np.column_stack([zz1.ravel(), zz2.ravel()]))
    return float(np.sum(np.outer(w, w).ravel() * vals))


def test_values_closed_form():
    assert phi(1.0, [0.0]) == pytest.approx(FOUR_PI ** -0.5, rel=1e-14)
    assert phi(1.0, [2.0]) == pytest.approx(FOUR_PI ** -0.5 * math.exp(-1.0), rel=1e-14)
    assert phi(-1.0, [3.7]) == 0.0
    assert phi(0.0, [0.0]) == 0.0


def test_two_dimensional_is_product():
    t, x = 0.8, np.array([0.3, -1.1])
    assert phi(t, x) == pytest.approx(phi(t, x[:1]) * phi(t, x[1:]), rel=1e-13)


def test_underflow_is_zero_not_nan():
    v = phi(1e-6, [10.0])
    assert v == 0.0


@pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
def test_mass_one_dimension(t):
    mass, _ = integrate.quad(lambda y: float(phi(t, [y])), -np.inf, np.inf, epsabs=1e-13)
    assert abs(mass - 1.0) < 1e-8


@pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
def test_mass_two_dimensions(t):
    assert abs(gauss_mass_2d(t) - 1.0) < 1e-8


def test_derivative_examples():
    d1 = phi_derivative(1.0, [0.0], DerivativeOrder(0, (1,)))
    assert abs(d1) < 1e-15
    dt = phi_derivative(1.0, [0.0], DerivativeOrder(1, (0,)))
    dxx = phi_derivative(1.0, [0.0], DerivativeOrder(0, (2,)))
    assert dt == pytest.approx(dxx, rel=1e-14)
    h = 1e-4
    fd = (phi(1.0, [h]) - 2 * phi(1.0, [0.0]) + phi(1.0, [-h])) / h ** 2
    assert dt == pytest.approx(fd, rel=1e-6)
    for order in [DerivativeOrder(0, (3,)), DerivativeOrder(2, (1,))]:
        assert phi_derivative(-0.5, [1.2], order) == 0.0


def test_order_ceiling():
    with pytest.raises(OrderTooHigh):
        phi_derivative(1.0, [0.0], DerivativeOrder(3, (0,)))
    with pytest.raises(OrderTooHigh):
        phi_derivative(1.0, [0.0, 0.0], DerivativeOrder(0, (3, 2)))
    assert np.isfinite(phi_derivative(1.0, [0.0], DerivativeOrder(3, (0,)), j_max=3))


def _fd(t, x, order, h=1e-4):
    """Central difference of the next-lower order along the last raised index."""
    x = np.asarray(x, dtype=float)
    if order.j > 0:
        lower = DerivativeOrder(order.j - 1, order.alpha)
        return (phi_derivative(t + h, x, lower) - phi_derivative(t - h, x, lower)) / (2 * h)
    i = max(k for k, a in enumerate(order.alpha) if a > 0)
    alpha = list(order.alpha)
    alpha[i] -= 1
    e = np.zeros_like(x)
    e[i] = h
    lower = DerivativeOrder(0, tuple(alpha))
    return (phi_derivative(t, x + e, lower) - phi_derivative(t, x - e, lower)) / (2 * h)


@pytest.mark.parametrize("order", [DerivativeOrder(0, (1, 0)), DerivativeOrder(0, (1, 1)),
                                   DerivativeOrder(0, (0, 3)), DerivativeOrder(1, (0, 0)),
                                   DerivativeOrder(1, (1, 0)), DerivativeOrder(2, (0, 0))])
def test_derivatives_match_finite_differences(order):
    rng = np.random.default_rng(7)
    for _ in range(20):
        t = rng.uniform(0.5, 2.0)
        x = rng.uniform(-1.5, 1.5, 2)
        exact = phi_derivative(t, x, order)
        approx = _fd(t, x, order)
        scale = max(abs(exact), 1e-3 * abs(phi(t, x)))
        assert abs(exact - approx) <= 1e-6 * scale + 1e-10


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-4, 4), st.floats(-4, 4))
def test_caloric_identity(t, x1, x2):
    x = [x1, x2]
    dt = phi_derivative(t, x, DerivativeOrder(1, (0, 0)))
    lap = (phi_derivative(t, x, DerivativeOrder(0, (2, 0)))
           + phi_derivative(t, x, DerivativeOrder(0, (0, 2))))
    assert dt == pytest.approx(lap, rel=1e-10, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_causality(t, x):
    if t <= 0:
        assert phi(t, [x]) == 0.0
    else:
        assert phi(t, [x]) > 0.0 or x * x / (4 * t) > 690


def test_kernel_matrix_shape_and_translation():
    t = np.array([0.5, 1.0, 2.0])
    x = np.array([[0.0], [1.0], [-1.0]])
    a = kernel_matrix(t, x, [-1.0, 0.0], [[0.0], [0.5]])
    assert a.shape == (3, 2)
    assert a[1, 1] == pytest.approx(phi(1.0, [0.5]))
    assert a[0, 0] == pytest.approx(phi(1.5, [0.0]))


def test_point_json_roundtrip():
    p = SpacetimePoint(-1.5, (0.25, 2.0))
    assert SpacetimePoint.from_json(p.to_json()) == p
    assert p.n == 2
