import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boasbuck.bbsystem import (
    BoasBuckSystem,
    builtin_system,
    load_system,
    p_of_x,
    resolve_system,
    theta_values,
    validate_system,
    weight_distribution,
)
from boasbuck.errors import PositivityViolationError, TruncationFailureError

EXP1 = builtin_system("exp1")
EXP2 = builtin_system("exp2")
QUICK_GRID = np.arange(0, 51, 5.0)


def exp2_theta(y, J):
    """Coefficients of exp(s + y s^2/2 + s^3/6) by the explicit triple sum."""
    y = Fraction(y)
    out = [Fraction(0)] * (J + 1)
    for c in range(J // 3 + 1):
        for b in range((J - 3 * c) // 2 + 1):
            for a in range(J - 3 * c - 2 * b + 1):
                out[a + 2 * b + 3 * c] += (y / 2) ** b / (
                    math.factorial(a) * math.factorial(b) * math.factorial(c) * 6 ** c)
    return [float(v) for v in out]


def test_exp1_validates_with_r_warning():
    rep = validate_system(EXP1, y_grid=QUICK_GRID)
    assert rep.passed
    assert [c.name for c in rep.warnings] == ["r_j != 0"]


def test_builtin_systems_pass_full_validation():
    assert validate_system(EXP2).passed


def test_u_square_fails_u_prime():
    bad = BoasBuckSystem(xi_coeffs=(), s_coeffs=(1.0,), u_coeffs=(1.0,), xi_kind="exp")
    rep = validate_system(bad, y_grid=QUICK_GRID)
    assert not rep.passed
    assert "U'(1) = 1" in [c.name for c in rep.failures()]


def test_zero_s_fails():
    bad = BoasBuckSystem(xi_coeffs=(), s_coeffs=(0.0,), u_coeffs=(0.5,), xi_kind="exp")
    assert "S(1) > 0" in [c.name for c in validate_system(bad, y_grid=QUICK_GRID).failures()]


def test_negative_theta_is_detected():
    bad = BoasBuckSystem(xi_coeffs=(), s_coeffs=(1.0,), u_coeffs=(0.5,), v_coeffs=(-1.0,), xi_kind="exp")
    assert "Theta_j(y) >= 0 (sampled)" in [c.name for c in validate_system(bad, y_grid=QUICK_GRID).failures()]
    with pytest.raises(PositivityViolationError):
        theta_values(bad, 0.0, 12)


def test_p_of_x_examples():
    assert p_of_x(EXP1, 10, 1.0) == 5.0
    assert p_of_x(EXP2, 7, 0.0) == pytest.approx(1 / 6)
    assert p_of_x(EXP2, 2, 1.0) == pytest.approx(1 + 1 / 6)


def test_theta_exp1_even_terms():
    vals = theta_values(EXP1, 2.0, 6).true_values()
    np.testing.assert_allclose(vals, [1, 0, 1, 0, 0.5, 0, 1 / 6], rtol=1e-15, atol=0)


def test_theta_at_zero_and_order_zero():
    vals = theta_values(EXP1, 0.0, 8).true_values()
    assert vals[0] == 1.0 and np.all(vals[1:] == 0.0)
    assert theta_values(EXP1, 3.7, 0).true_values().tolist() == [1.0]


@pytest.mark.parametrize("y", [0.0, 0.7, 3.0, 12.5])
def test_theta_exp2_against_triple_sum(y):
    J = 25
    got = theta_values(EXP2, y, J).true_values()
    np.testing.assert_allclose(got, exp2_theta(y, J), rtol=1e-12)


@pytest.mark.parametrize("y", [40.0, 300.0])
def test_theta_exp1_poisson_at_large_arguments(y):
    """Large orders use the rescaled path; weights must still be Poisson(y/2) on even j."""
    from scipy.stats import poisson

    J = int(y + 20 * math.sqrt(y) + 40)
    w = theta_values(EXP1, y, J).weights
    k = np.arange(0, J // 2 + 1)
    np.testing.assert_allclose(w[::2], poisson.pmf(k, y / 2), rtol=1e-10, atol=1e-300)
    assert np.all(w[1::2] == 0.0)


def test_table_partial_sum_below_normalizer():
    tab = theta_values(EXP2, 9.0, 30)
    assert tab.values.sum() <= tab.normalizer * (1 + 1e-10)
    assert np.all(tab.values >= -1e-12 * tab.normalizer)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 50), st.integers(3, 40), st.integers(41, 120))
def test_truncation_orders_agree_on_shared_indices(y, j1, j2):
    a = theta_values(EXP2, y, j1).true_values()
    b = theta_values(EXP2, y, j2).true_values()
    assert a.tolist() == b[: j1 + 1].tolist()


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([EXP1, EXP2]), st.integers(1, 640), st.floats(0, 10))
def test_weights_normalize(sys, n, x):
    eps = 1e-12
    table, j_cut = weight_distribution(sys, n, x, eps=eps)
    assert table.order == j_cut
    total = math.fsum(table.weights)
    assert abs(total - 1.0) <= eps + 1e-9
    assert total <= 1.0 + 1e-10
    assert np.all(table.weights >= -1e-12)


def test_weight_distribution_examples():
    table, _ = weight_distribution(EXP1, 5, 1.0, eps=1e-12)
    s = math.fsum(table.weights)
    assert 1 - 1e-12 <= s <= 1 + 1e-15
    _, j0 = weight_distribution(EXP1, 5, 0.0)
    assert j0 <= 32
    _, loose = weight_distribution(EXP1, 50, 2.0, eps=0.5)
    _, tight = weight_distribution(EXP1, 50, 2.0, eps=1e-12)
    assert loose <= tight


def test_truncation_cap():
    with pytest.raises(TruncationFailureError):
        weight_distribution(EXP1, 640, 10.0, cap=100)


def test_json_round_trip(tmp_path):
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(EXP2.to_dict()))
    again = load_system(path)
    assert again.to_dict() == EXP2.to_dict()
    assert resolve_system(str(path)).s_coeffs == EXP2.s_coeffs
    assert resolve_system("EXP-1") is EXP1 or resolve_system("EXP-1").to_dict() == EXP1.to_dict()


def test_series_only_xi_matches_exp_for_long_truncation():
    xi = tuple(1 / math.factorial(k) for k in range(60))
    sys = BoasBuckSystem(xi_coeffs=xi, s_coeffs=(1.0,), u_coeffs=(0.5,), xi_kind="series-only")
    assert sys.xi_ratio(5.0, 1) == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(theta_values(sys, 4.0, 20).weights, theta_values(EXP1, 4.0, 20).weights, rtol=1e-12)
