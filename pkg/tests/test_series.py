import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boasbuck.errors import CompositionDomainError, OrderMismatchError
from boasbuck.series import (
    TruncatedSeries,
    compose_scaled,
    exp_series,
    series_compose,
    series_derivatives_at_one,
    series_eval,
    series_mul,
)

finite = st.floats(-4, 4, allow_nan=False, allow_infinity=False)


def coeff_lists(order):
    return st.lists(finite, min_size=order + 1, max_size=order + 1)


def naive_mul(a, b, order):
    out = [0.0] * (order + 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            if i + j <= order:
                out[i + j] += x * y
    return out


def test_binomial_square():
    a = TruncatedSeries([1.0, 1.0, 0.0])
    assert series_mul(a, a).coeffs.tolist() == [1.0, 2.0, 1.0]


def test_multiplicative_identity():
    a = TruncatedSeries([0.3, -1.0, 2.5, 4.0])
    one = TruncatedSeries.constant(1.0, 3)
    assert series_mul(a, one).coeffs.tolist() == a.coeffs.tolist()


def test_exp_times_exp_minus():
    e = exp_series(6)
    em = TruncatedSeries([(-1) ** k / math.factorial(k) for k in range(7)])
    prod = series_mul(e, em).coeffs
    assert prod[0] == pytest.approx(1.0, abs=1e-15)
    assert np.max(np.abs(prod[1:])) < 1e-15


def test_order_mismatch():
    with pytest.raises(OrderMismatchError):
        series_mul(TruncatedSeries([1.0, 2.0]), TruncatedSeries([1.0, 2.0, 3.0]))


def test_compose_exp_half_square():
    inner = TruncatedSeries.from_coeffs([0.5], order=4, shift=2)
    out = series_compose(exp_series(4), inner).coeffs
    np.testing.assert_allclose(out, [1, 0, 0.5, 0, 0.125], atol=1e-16)


def test_compose_with_zero_inner():
    outer = TruncatedSeries([2.0, 3.0, 5.0])
    assert series_compose(outer, TruncatedSeries.zero(2)).coeffs.tolist() == [2.0, 0.0, 0.0]


def test_compose_identity_outer():
    inner = TruncatedSeries([0.0, 1.5, -2.0, 0.25])
    ident = TruncatedSeries([0.0, 1.0, 0.0, 0.0])
    assert series_compose(ident, inner).coeffs.tolist() == inner.coeffs.tolist()


def test_compose_rejects_constant_term():
    with pytest.raises(CompositionDomainError):
        series_compose(exp_series(3), TruncatedSeries([0.1, 1.0, 0.0, 0.0]))


def test_eval_examples():
    assert series_eval(exp_series(20), 1.0) == pytest.approx(math.e, abs=1e-12)
    assert series_eval(TruncatedSeries([3.5, 2.0, 9.0]), 0.0) == 3.5
    assert series_eval(TruncatedSeries.from_coeffs([0.5], shift=2), 1.0) == 0.5


def test_derivatives_at_one_examples():
    assert series_derivatives_at_one([0.5], 2) == (0.5, 1.0, 1.0)
    v = series_derivatives_at_one([1 / 6], 3)
    assert v[0] == pytest.approx(1 / 6) and v[1] == pytest.approx(0.5) and v[2] == pytest.approx(1.0)
    assert series_derivatives_at_one([], 1) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        series_derivatives_at_one([1.0], 4)


def test_valuation_and_order():
    s = TruncatedSeries.from_coeffs([2.0], order=5, shift=3)
    assert s.order == 5 and s.valuation == 3
    assert TruncatedSeries.zero(4).valuation == 5


def test_coeffs_read_only():
    s = TruncatedSeries([1.0, 2.0])
    with pytest.raises(ValueError):
        s.coeffs[0] = 5.0


@given(coeff_lists(8), coeff_lists(8))
def test_mul_matches_naive_convolution(a, b):
    got = series_mul(TruncatedSeries(a), TruncatedSeries(b)).coeffs
    np.testing.assert_allclose(got, naive_mul(a, b, 8), rtol=1e-12, atol=1e-12)


@given(coeff_lists(6), coeff_lists(6), coeff_lists(6))
def test_mul_commutative_associative(a, b, c):
    A, B, C = TruncatedSeries(a), TruncatedSeries(b), TruncatedSeries(c)
    np.testing.assert_allclose(series_mul(A, B).coeffs, series_mul(B, A).coeffs, rtol=1e-14, atol=1e-13)
    left = series_mul(series_mul(A, B), C).coeffs
    right = series_mul(A, series_mul(B, C)).coeffs
    scale = 1.0 + np.max(np.abs(left))
    np.testing.assert_allclose(left, right, rtol=1e-12, atol=1e-12 * scale)


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.floats(-0.5, 0.5))
def test_compose_commutes_with_evaluation(inner_tail, t):
    order = 24
    inner = TruncatedSeries.from_coeffs(inner_tail, order=order, shift=1)
    composed = series_compose(exp_series(order), inner)
    direct = math.exp(series_eval(inner, t))
    assert series_eval(composed, t) == pytest.approx(direct, abs=1e-8)


@settings(max_examples=50)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.sampled_from([0, 1, 2, 3]))
def test_derivatives_match_finite_differences(coeffs, shift):
    def g(t):
        return sum(c * t ** (j + shift) for j, c in enumerate(coeffs))

    h = 1e-5
    v, d1, d2 = series_derivatives_at_one(coeffs, shift)
    fd1 = (g(1 + h) - g(1 - h)) / (2 * h)
    fd2 = (g(1 + h) - 2 * g(1) + g(1 - h)) / h ** 2
    scale = 1.0 + sum(abs(c) for c in coeffs) * (shift + len(coeffs)) ** 2
    assert abs(d1 - fd1) <= 1e-6 * scale
    assert abs(d2 - fd2) <= 1e-4 * scale  # second difference loses ~half the digits


@settings(max_examples=30)
@given(st.lists(st.floats(0, 2), min_size=2, max_size=4), st.integers(5, 30), st.integers(31, 60))
def test_truncation_orders_agree_exactly(tail, j_small, j_big):
    def comp(order):
        inner = TruncatedSeries.from_coeffs(tail, order=order, shift=1)
        return series_compose(exp_series(order), inner).coeffs

    small, big = comp(j_small), comp(j_big)
    assert small.tolist() == big[: j_small + 1].tolist()


@settings(max_examples=30)
@given(st.lists(st.floats(0, 1.5), min_size=2, max_size=3))
def test_scaled_composition_matches_plain(tail):
    order = 30
    inner = TruncatedSeries.from_coeffs(tail, order=order, shift=1)
    plain = series_compose(exp_series(order), inner).coeffs
    mant = np.array([1 / math.factorial(k) for k in range(order + 1)])
    coeffs, e = compose_scaled(mant, np.zeros(order + 1, dtype=np.int64), inner.coeffs)
    np.testing.assert_allclose(np.ldexp(coeffs, e), plain, rtol=1e-12, atol=1e-300)
