import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zetalab import quadrature
from zetalab.errors import BudgetError


@given(st.integers(1, 20), st.lists(st.floats(-3, 3), min_size=1, max_size=12))
def test_gauss_legendre_exact_for_polynomials(order, coeffs):
    coeffs = coeffs[: 2 * order]
    x, w = quadrature.gauss_legendre(order)
    poly = np.polynomial.Polynomial(coeffs)
    exact = poly.integ()(1.0) - poly.integ()(-1.0)
    assert abs(np.dot(w, poly(x)) - exact) <= 1e-12 * (1 + sum(abs(c) for c in coeffs))


def test_gauss_legendre_is_read_only():
    x, _ = quadrature.gauss_legendre(8)
    with pytest.raises(ValueError):
        x[0] = 0.0


def test_panels_integrate_oscillatory_function():
    res = quadrature.integrate_panels(np.cos, np.linspace(0, 40, 41), order=16)
    assert abs(res.value - math.sin(40)) < 1e-13
    assert res.error < 1e-6


def test_panel_budget_refuses():
    with pytest.raises(BudgetError, match="split"):
        quadrature.integrate_panels(np.sin, np.linspace(0, 1, 1001), order=16, max_nodes=100)


@pytest.mark.parametrize("f, a, b, exact", [
    (np.exp, 0.0, 1.0, math.e - 1),
    (lambda x: 1 / (1 + 25 * x * x), -1.0, 1.0, 2 * math.atan(5) / 5),
    (np.sqrt, 0.0, 1.0, 2 / 3),
    (lambda x: np.exp(1j * 30 * x), 0.0, 2.0, (np.exp(60j) - 1) / 30j),
])
def test_adaptive_known_integrals(f, a, b, exact):
    val, err = quadrature.adaptive(f, a, b, rtol=1e-13)
    assert abs(val - exact) <= 1e-11
    assert err < 1e-9


def test_adaptive_reversed_limits_and_empty_range():
    v1, _ = quadrature.adaptive(np.exp, 0.0, 1.0)
    v2, _ = quadrature.adaptive(np.exp, 1.0, 0.0)
    assert v1 == -v2
    assert quadrature.adaptive(np.exp, 2.0, 2.0) == (0.0, 0.0)


def test_adaptive_budget():
    with pytest.raises(BudgetError):
        quadrature.adaptive(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 0.0, 1.0,
                            rtol=1e-15, max_nodes=10_000, noise=0.0)


def test_node_counter_counts_every_evaluation():
    quadrature.reset_node_count()
    quadrature.integrate_panels(np.cos, [0.0, 1.0, 2.0], order=10)
    assert quadrature.node_count() == 2 * (10 + 5)
