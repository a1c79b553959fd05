import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpre2d.disorder import DisorderSpec, Family, cumulants, log_mgf, sample_sites
from dpre2d.engine import (ExplicitEnvironment, NumericRangeError, TimeWindow,
                           dyadic_decompose, log_partition_functions, partition_function,
                           sample_all, sample_batch, window_times)
from dpre2d.oracle import exact_second_moment
from dpre2d.walk import coupling_constant, return_probability_table

STEPS = np.array([(1, 0), (-1, 0), (0, 1), (0, -1)])


def _random_table(rng, T, half):
    return ExplicitEnvironment(rng.standard_normal((T + 1, 2 * half + 1, 2 * half + 1)),
                               (-half, -half))


def _enumerated_z(env, s, e, beta, start=(0, 0), family="gaussian"):
    """Average of the path weights over all 4^e paths."""
    lam = log_mgf(family, beta)
    vals, (o1, o2) = env.values, env.origin
    total = 0.0
    for idx in itertools.product(range(4), repeat=e):
        pos = np.asarray(start) + np.cumsum(STEPS[list(idx)], axis=0)
        expo = 0.0
        for n in range(s + 1, e + 1):
            i1, i2 = pos[n - 1, 0] - o1, pos[n - 1, 1] - o2
            inside = 0 <= i1 < vals.shape[1] and 0 <= i2 < vals.shape[2]
            expo += beta * (vals[n, i1, i2] if inside else 0.0) - lam
        total += math.exp(expo)
    return total / 4**e


@pytest.mark.parametrize("N, M, times", [(100, 2, (0, 10, 100)),
                                         (1000, 3, (0, 10, 100, 1000)),
                                         (10, 3, (0, 3, 5, 10))])
def test_dyadic_examples(N, M, times):
    assert dyadic_decompose(N, M).times == times


@settings(deadline=None)
@given(st.integers(min_value=2, max_value=10**5), st.integers(min_value=1, max_value=40))
def test_dyadic_grid_invariants(N, M):
    g = dyadic_decompose(N, M)
    t = g.times
    assert t[0] == 0 and t[-1] == N and len(t) == M + 1
    assert all(a <= b for a, b in zip(t, t[1:]))
    for k in range(1, M):
        # t_k is the least integer with t_k^M >= N^k
        assert t[k] ** M >= N**k > (t[k] - 1) ** M
    covered = [n for w in g.windows for n in w.disorder_times]
    assert covered == list(range(1, N + 1))


def test_dyadic_rejects_bad_input():
    with pytest.raises(ValueError):
        dyadic_decompose(1, 2)
    with pytest.raises(ValueError):
        dyadic_decompose(10, 0)


def test_time_window():
    w = TimeWindow.from_exponents(1000, 1 / 3, 2 / 3)
    assert (w.start_time, w.end_time) == (10, 100)
    assert list(w.disorder_times) == list(range(11, 101))
    assert window_times(50, 0.0, 1.0) == (0, 50)
    with pytest.raises(ValueError):
        TimeWindow(5, 4)


@pytest.mark.parametrize("family", list(Family))
def test_beta_zero_gives_one(family):
    spec = DisorderSpec(family, 3, 0)
    windows = [(0, 200), (0, 5), (17, 150), (40, 40)]
    logz, status = log_partition_functions(spec, windows, 0.0)
    assert np.all(status == 0)
    # probability conservation: each renormalized slice has mass 1
    assert np.max(np.abs(logz)) <= 1e-12
    env = _random_table(np.random.default_rng(0), 30, 35)
    assert partition_function(env, TimeWindow(0, 30), beta=0.0) == pytest.approx(1.0, abs=1e-13)


def test_one_step_enumeration():
    vals = np.zeros((2, 3, 3))
    # neighbours of the origin: (1,0), (-1,0), (0,1), (0,-1)
    vals[1, 2, 1], vals[1, 0, 1], vals[1, 1, 2], vals[1, 1, 0] = 0.3, -1.2, 2.0, 0.7
    env = ExplicitEnvironment(vals, (-1, -1))
    beta = 0.8
    lam = 0.5 * beta**2
    expected = 0.25 * sum(math.exp(beta * w - lam) for w in (0.3, -1.2, 2.0, 0.7))
    assert partition_function(env, TimeWindow(0, 1), beta=beta) == pytest.approx(
        expected, rel=1e-14)


@pytest.mark.parametrize("s, e", [(0, 4), (1, 4), (2, 5), (3, 3), (0, 1)])
def test_against_path_enumeration(s, e):
    env = _random_table(np.random.default_rng(s * 10 + e), e, e + 1)
    for start in [(0, 0), (1, -2)]:
        got = partition_function(env, TimeWindow(s, e), start=start, beta=0.7)
        assert got == pytest.approx(_enumerated_z(env, s, e, 0.7, start), rel=1e-12)


def test_several_windows_share_environment():
    env = _random_table(np.random.default_rng(5), 5, 6)
    windows = [(0, 5), (0, 2), (2, 5), (1, 4), (5, 5)]
    logz, status = log_partition_functions(env, windows, 0.6)
    for (s, e), lz in zip(windows, logz):
        assert math.exp(lz) == pytest.approx(_enumerated_z(env, s, e, 0.6), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(0, 2**32))
def test_translation_equivariance(dx1, dx2, seed):
    env = _random_table(np.random.default_rng(seed), 12, 14)
    windows = [(0, 12), (3, 9)]
    base, _ = log_partition_functions(env, windows, 0.9, start=(1, 2))
    moved, _ = log_partition_functions(env.shifted((dx1, dx2)), windows, 0.9,
                                       start=(1 + dx1, 2 + dx2))
    assert np.array_equal(base, moved)


@pytest.mark.parametrize("family", list(Family))
def test_keyed_matches_table(family):
    T = 40
    spec = DisorderSpec(family, 77, 4)
    n, x1, x2 = np.meshgrid(np.arange(T + 1), np.arange(-T, T + 1), np.arange(-T, T + 1),
                            indexing="ij")
    env = ExplicitEnvironment(sample_sites(spec, n, x1, x2), (-T, -T))
    windows = [(0, T), (0, 6), (6, T)]
    beta = coupling_constant(0.7, T)
    keyed, _ = log_partition_functions(spec, windows, beta)
    table, _ = log_partition_functions(env, windows, beta, family=family)
    np.testing.assert_allclose(keyed, table, rtol=0, atol=1e-12)


def test_m1_is_bit_identical():
    spec = DisorderSpec("gaussian", 1, 0)
    s = sample_all(spec, 64, 1, 0.6)
    assert s.log_z[0] == s.log_w
    assert s.product == s.w


def test_small_beta_hat_limit():
    spec = DisorderSpec("gaussian", 2, 0)
    s = sample_all(spec, 64, 3, 1e-8)
    assert np.all(np.abs(s.z - 1) < 1e-6) and abs(s.product - 1) < 1e-6


def test_empty_windows_give_one():
    spec = DisorderSpec("rademacher", 2, 0)
    s = sample_all(spec, 3, 6, 0.5)
    empty = [k for k, w in enumerate(dyadic_decompose(3, 6).windows) if w.empty]
    assert empty
    assert all(s.z[k] == 1.0 for k in empty)


@pytest.mark.parametrize("family", list(Family))
def test_positivity_and_u(family):
    log_w, log_z, status = sample_batch(DisorderSpec(family, 8, 0), 48, 4, 0.9,
                                        np.arange(200))
    assert np.all(status == 0)
    z = np.exp(log_z)
    assert np.all(z > 0) and np.all(np.exp(log_w) > 0)
    s = sample_all(DisorderSpec(family, 8, 5), 48, 4, 0.9)
    # U = Z - 1 is one rounding away from Z
    np.testing.assert_allclose(1.0 + s.u, s.z, rtol=4.5e-16, atol=0)
    np.testing.assert_array_equal(s.log_z, log_z[5])


def test_batch_independent_of_chunking():
    spec = DisorderSpec("gaussian", 12, 0)
    a = sample_batch(spec, 32, 2, 0.5, np.arange(10))
    b = sample_batch(spec, 32, 2, 0.5, np.arange(5, 10))
    np.testing.assert_array_equal(a[0][5:], b[0])
    np.testing.assert_array_equal(a[1][5:], b[1])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 40), st.integers(0, 40)), min_size=1, max_size=4),
       st.sampled_from(list(Family)))
def test_batch_matches_separate_runs(pairs, family):
    # buffers are reused across windows and replicates; nothing may leak
    windows = [(min(p), max(p)) for p in pairs]
    spec = DisorderSpec(family, 8, 0)
    beta = coupling_constant(0.7, 40)
    batch, _ = log_partition_functions(spec, windows, beta, replicates=np.arange(3))
    for r in range(3):
        for i, w in enumerate(windows):
            alone, _ = log_partition_functions(DisorderSpec(family, 8, r), [w], beta)
            assert batch[r, i] == pytest.approx(alone[0], rel=1e-13, abs=1e-14)


def test_martingale_mean():
    R = 10_000
    log_w, _, _ = sample_batch(DisorderSpec("rademacher", 21, 0), 64, 1, 0.7, np.arange(R))
    w = np.exp(log_w)
    assert abs(w.mean() - 1) <= 4 * w.std(ddof=1) / math.sqrt(R)


def test_window_independence():
    R = 10_000
    _, log_z, _ = sample_batch(DisorderSpec("rademacher", 22, 0), 64, 2, 0.6, np.arange(R))
    u = np.expm1(log_z)
    corr = np.corrcoef(u[:, 0], u[:, 1])[0, 1]
    assert abs(corr) <= 5 / math.sqrt(R)


@pytest.mark.parametrize("family", list(Family))
def test_variance_matches_oracle(family):
    R, N, b = 100_000, 16, 0.8
    beta = coupling_constant(b, N)
    spec = DisorderSpec(family, 23, 0)
    logz, _ = log_partition_functions(spec, [(4, 16)], beta, replicates=np.arange(R))
    z = np.exp(logz[:, 0])
    d = (z - 1.0) ** 2
    oracle = exact_second_moment(4, 16, cumulants(family, beta).big_lambda,
                                 return_probability_table(16)) - 1
    assert abs(d.mean() - oracle) <= 4 * d.std(ddof=1) / math.sqrt(R)


def test_numeric_range_error():
    vals = np.ones((3, 5, 5))
    env = ExplicitEnvironment(vals, (-2, -2))
    logz, status = log_partition_functions(env, [(0, 2)], 1000.0)
    assert status[0] != 0
    with pytest.raises(NumericRangeError):
        partition_function(env, TimeWindow(0, 2), beta=1000.0)


def test_negative_beta_rejected():
    with pytest.raises(ValueError):
        log_partition_functions(DisorderSpec(), [(0, 3)], -0.1)
