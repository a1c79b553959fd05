import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpre2d.walk import (convolution_return_probabilities, coupling_constant, overlap_sum,
                         overlap_sums, return_probability, return_probability_table)

STEPS = [(1, 0), (-1, 0), (0, 1), (0, -1)]


def _enumerated_return(n):
    """Fraction of the 4^(2n) planar paths of length 2n that end at 0."""
    hits = sum(1 for path in itertools.product(STEPS, repeat=2 * n)
               if sum(p[0] for p in path) == 0 and sum(p[1] for p in path) == 0)
    return hits / 4 ** (2 * n)


def test_return_probability_at_zero():
    assert return_probability(0) == 1.0


@pytest.mark.parametrize("n, expected", [(1, 0.25), (2, 0.140625)])
def test_return_probability_small(n, expected):
    assert return_probability(n) == expected
    assert _enumerated_return(n) == expected


def test_return_probability_rejects_negative():
    with pytest.raises(ValueError):
        return_probability(-1)


def test_convolution_matches_closed_form():
    p, odd = convolution_return_probabilities(64)
    exact = np.array([return_probability(n) for n in range(1, 65)])
    assert np.max(np.abs(p / exact - 1.0)) <= 1e-12
    assert np.all(odd == 0.0)


def test_local_limit_regime():
    n = 10_000
    assert 0.9 <= n * math.pi * return_probability(n) <= 1.1


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=3000))
def test_closed_form_against_exact_integers(n):
    exact = Fraction(math.comb(2 * n, n), 4**n) ** 2
    assert return_probability(n) == pytest.approx(float(exact), rel=1e-12)


def test_table_entries():
    t = return_probability_table(5000)
    v = t.values
    assert np.all((v > 0) & (v <= 1))
    assert np.all(np.diff(v) < 0)
    idx = [1, 2, 17, 511, 512, 513, 4999, 5000]
    ref = np.array([return_probability(n) for n in idx])
    assert np.max(np.abs(np.array([t[n] for n in idx]) / ref - 1)) <= 1e-12
    assert t[0] == 1.0 and t.padded()[0] == 1.0
    with pytest.raises(IndexError):
        t[5001]


def test_table_is_read_only():
    t = return_probability_table(10)
    with pytest.raises(ValueError):
        t.values[0] = 0.5


@pytest.mark.parametrize("N, expected", [(1, 0.25), (2, 0.390625), (3, 0.48828125)])
def test_overlap_sum_examples(N, expected):
    assert overlap_sum(N).value == expected


def test_overlap_sum_increasing_and_logarithmic():
    R = overlap_sums(10**7)
    assert np.all(np.diff(R[1:]) > 0)
    ladder = [10**k for k in range(3, 8)]
    ratio = [R[N] / (math.log(N) / math.pi) for N in ladder]
    assert all(a > b for a, b in zip(ratio, ratio[1:]))
    assert 1.0 < ratio[-1] < 1.02
    # R_N - log(N)/pi settles to a constant, so the ratio tends to 1
    d = [R[N] - math.log(N) / math.pi for N in ladder]
    assert abs(d[-1] - d[-2]) < 1e-5


@pytest.mark.parametrize("beta_hat, N, expected", [(0.5, 1, 1.0), (1.0, 2, 1.6)])
def test_coupling_constant_examples(beta_hat, N, expected):
    assert coupling_constant(beta_hat, N) == pytest.approx(expected, rel=1e-15)


@given(st.floats(min_value=1e-12, max_value=10.0), st.integers(min_value=1, max_value=5000))
def test_coupling_constant_linear_in_beta_hat(beta_hat, N):
    assert coupling_constant(beta_hat, N) == pytest.approx(
        beta_hat * coupling_constant(1.0, N), rel=1e-14)


def test_coupling_constant_rejects_nonpositive():
    with pytest.raises(ValueError):
        coupling_constant(0.0, 10)
