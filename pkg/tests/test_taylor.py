import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from garza import taylor

X = np.linspace(0.1, 0.9, 7)


def closed_forms():
    # (function, list of derivative functions r = 0..3)
    return [
        (lambda x: x**3, [lambda x: x**3, lambda x: 3 * x**2, lambda x: 6 * x, lambda x: 6 + 0 * x]),
        (lambda x: taylor.exp(x**2), [lambda x: np.exp(x**2), lambda x: 2 * x * np.exp(x**2),
                                      lambda x: (2 + 4 * x**2) * np.exp(x**2),
                                      lambda x: (12 * x + 8 * x**3) * np.exp(x**2)]),
        (lambda x: 1 / (1 + x) ** 4, [lambda x: (1 + x) ** -4, lambda x: -4 * (1 + x) ** -5,
                                      lambda x: 20 * (1 + x) ** -6, lambda x: -120 * (1 + x) ** -7]),
        (lambda x: taylor.sin(3 * x), [lambda x: np.sin(3 * x), lambda x: 3 * np.cos(3 * x),
                                       lambda x: -9 * np.sin(3 * x), lambda x: -27 * np.cos(3 * x)]),
        (lambda x: taylor.log(1 + x), [lambda x: np.log(1 + x), lambda x: 1 / (1 + x),
                                       lambda x: -1 / (1 + x) ** 2, lambda x: 2 / (1 + x) ** 3]),
        (lambda x: taylor.sqrt(x), [np.sqrt, lambda x: 0.5 * x**-0.5, lambda x: -0.25 * x**-1.5,
                                    lambda x: 0.375 * x**-2.5]),
        (lambda x: (1 - x) ** 1.5, [lambda x: (1 - x) ** 1.5, lambda x: -1.5 * (1 - x) ** 0.5,
                                    lambda x: 0.75 * (1 - x) ** -0.5, lambda x: 0.375 * (1 - x) ** -1.5]),
    ]


@pytest.mark.parametrize("case", range(len(closed_forms())))
def test_jet_derivatives_match_closed_forms(case):
    f, ders = closed_forms()[case]
    got = taylor.derivatives(f, X, 3)
    for r, d in enumerate(ders):
        assert_allclose(got[r], d(X), rtol=1e-12, atol=1e-12)


def test_numpy_ufuncs_dispatch_to_jets():
    a = taylor.derivatives(lambda x: np.exp(x) * np.cos(x), X, 2)
    b = taylor.derivatives(lambda x: taylor.exp(x) * taylor.cos(x), X, 2)
    assert_allclose(a, b, rtol=1e-14)


def test_integer_power_at_zero_is_exact():
    d = taylor.derivatives(lambda x: x**4, np.array([0.0]), 4)
    assert_allclose(d[:, 0], [0, 0, 0, 0, 24])


def test_constant_function_promotes_to_jet():
    d = taylor.derivatives(lambda x: 2.5, X, 2)
    assert_allclose(d[0], 2.5)
    assert_allclose(d[1:], 0.0)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_finite_differences_agree_with_jets(order):
    f = lambda x: np.exp(x) / (2 + x)
    fd = taylor.finite_difference_derivatives(f, X, order)
    an = taylor.derivatives(lambda x: taylor.exp(x) / (2 + x), X, order)
    assert_allclose(fd[order], an[order], rtol=10 ** (-6 + 1.5 * order))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-1.5, 1.5))
def test_quotient_rule_from_jets(a, x0):
    # d/dx (sin(ax) / (1 + x^2)) compared with the quotient rule
    x = np.array([x0])
    got = taylor.derivatives(lambda t: taylor.sin(a * t) / (1 + t**2), x, 1)[1, 0]
    want = (a * math.cos(a * x0) * (1 + x0**2) - 2 * x0 * math.sin(a * x0)) / (1 + x0**2) ** 2
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)
