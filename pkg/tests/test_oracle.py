import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpre2d.disorder import cumulants
from dpre2d.engine import window_times
from dpre2d.oracle import (BRUTE_FORCE_CAP, brute_force_second_moment, collision_weight,
                           exact_second_moment, geometric_bound, lambda_limit, lambda_MN,
                           limit_second_moment, moment_table)
from dpre2d.walk import coupling_constant, overlap_sum, return_probability_table


def test_degenerate_lambda():
    assert exact_second_moment(0, 10, 0.0) == 1.0
    assert brute_force_second_moment(3, 0.0) == 1.0


@given(st.floats(min_value=0.0, max_value=5.0))
def test_single_step_window(lam):
    assert exact_second_moment(0, 1, lam) == pytest.approx(1 + lam / 4, rel=1e-15)


def test_brute_force_one_step():
    for lam in (0.1, 1.0, math.e - 1):
        assert brute_force_second_moment(1, lam) == pytest.approx(1 + lam / 4, rel=1e-15)


def test_gaussian_window_four():
    lam = cumulants("gaussian", 0.5).big_lambda
    assert lam == pytest.approx(math.exp(0.25) - 1, rel=1e-15)
    assert abs(exact_second_moment(0, 4, lam) - brute_force_second_moment(4, lam)) <= 1e-10


def test_two_steps():
    for lam in (0.1, 0.5):
        assert abs(exact_second_moment(0, 2, lam) - brute_force_second_moment(2, lam)) <= 1e-12


@pytest.mark.parametrize("N", [1, 2, 3, 4])
@pytest.mark.parametrize("lam", [0.1, 0.5, 1.0, math.e - 1])
def test_all_windows_against_enumeration(N, lam):
    for s in range(N + 1):
        for e in range(s, N + 1):
            assert abs(exact_second_moment(s, e, lam)
                       - brute_force_second_moment(N, lam, (s, e))) <= 1e-10


def test_brute_force_cap():
    with pytest.raises(ValueError):
        brute_force_second_moment(BRUTE_FORCE_CAP + 1, 0.1)


def test_invalid_windows():
    with pytest.raises(ValueError):
        exact_second_moment(5, 3, 0.1)
    with pytest.raises(ValueError):
        exact_second_moment(0, 3, -0.1)
    with pytest.raises(ValueError):
        exact_second_moment(0, 50, 0.1, return_probability_table(10))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 300), st.integers(0, 300), st.floats(0.0, 0.3))
def test_second_moment_monotone_in_end(s, length, lam):
    table = return_probability_table(700)
    e = s + length
    a = exact_second_moment(s, e, lam, table)
    b = exact_second_moment(s, e + 1, lam, table)
    assert 1.0 <= a <= b


@pytest.mark.parametrize("N", [16, 256, 4096])
@pytest.mark.parametrize("beta_hat", [0.3, 0.6, 0.8])
def test_geometric_bound(N, beta_hat):
    lam = collision_weight(beta_hat, N)
    bound = geometric_bound(N, lam)
    assert bound is not None
    assert exact_second_moment(0, N, lam) <= bound


def test_geometric_bound_absent_when_divergent():
    assert geometric_bound(100, 10.0 / overlap_sum(100).value) is None


def test_limit_examples():
    assert limit_second_moment(0, 1, 0.5) == pytest.approx(4 / 3, rel=1e-15)
    assert limit_second_moment(0.3, 0.3, 0.9) == 1.0
    assert limit_second_moment(0, 0.5, 0.5) == pytest.approx(8 / 7, rel=1e-15)
    with pytest.raises(ValueError):
        limit_second_moment(0, 1, 1.0)


def test_limit_matches_lambda():
    for b in (0.2, 0.5, 0.9):
        assert limit_second_moment(0, 1, b) == pytest.approx(math.exp(lambda_limit(b)))


def _gap(N, a, b, beta_hat=0.5):
    s, e = window_times(N, a, b)
    return exact_second_moment(s, e, collision_weight(beta_hat, N)) \
        - limit_second_moment(a, b, beta_hat)


@pytest.mark.parametrize("a, b", [(0.0, 1.0), (0.0, 0.5), (0.0, 0.25)])
def test_monotone_approach_to_limit(a, b):
    gaps = [abs(_gap(N, a, b)) for N in (2**8, 2**11, 2**14)]
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("a, b", [(0.5, 1.0), (0.25, 0.75)])
def test_late_windows_near_limit(a, b):
    # windows away from 0 cross the limit at small N, so only closeness is asserted
    assert abs(_gap(2**14, a, b)) < 5e-3


def test_lambda_mn_single_window():
    N = 500
    lam = collision_weight(0.6, N)
    assert lambda_MN(N, 1, 0.6) == pytest.approx(exact_second_moment(0, N, lam) - 1, rel=1e-14)


def test_lambda_mn_small_beta():
    assert lambda_MN(1000, 4, 1e-6) < 1e-11


def test_moment_table_rows():
    mt = moment_table(1000, 3, 0.5, "rademacher")
    rows = mt.rows()
    assert [r["t_k"] for r in rows] == [10, 100, 1000]
    assert rows[-1]["running_lambda_MN"] == pytest.approx(mt.lambda_MN)
    assert mt.big_lambda == pytest.approx(math.tanh(coupling_constant(0.5, 1000)) ** 2)
    assert np.all(mt.var_u >= 0)
    assert rows[1]["limit"] == pytest.approx(limit_second_moment(1 / 3, 2 / 3, 0.5))
