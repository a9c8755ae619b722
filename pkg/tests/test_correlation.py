import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbtphase.correlation import (
    CorrelationAccumulator,
    InsufficientSamplesError,
    ZeroMeanError,
    block_length_for,
    channel_mean,
    g2_auto_zero,
    g2_cross,
    g2_cross_at,
)

LAGS = (-3, 0, 1, 4)


def pair_ratio(a, b, lag):
    # direct oracle: average over all pairs (a[i], b[i + lag])
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if lag >= 0:
        x, y = a[: len(a) - lag], b[lag:]
    else:
        x, y = a[-lag:], b[: len(b) + lag]
    return np.mean(x * y) / (np.mean(x) * np.mean(y))


@settings(max_examples=30)
@given(st.integers(0, 2**32), st.integers(1100, 1500), st.integers(1, 200))
def test_ratio_of_means_matches_direct_pair_average(seed, n, block):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 7, n)
    b = rng.integers(0, 7, n)
    acc = CorrelationAccumulator.from_arrays(a, b, LAGS, block)
    cur = g2_cross(acc)
    for lag, v, n_pairs in zip(cur.lags, cur.value, cur.n_pairs):
        assert abs(v - pair_ratio(a, b, lag)) < 1e-12
        assert n_pairs == n - abs(lag)


def test_constant_inputs():
    acc = CorrelationAccumulator.from_arrays(np.full(2000, 3.0), np.full(2000, 5.0), (0, 2), 10, integer=False)
    np.testing.assert_allclose(g2_cross(acc).value, 1.0, rtol=1e-14)
    assert abs(g2_auto_zero(acc, "b").value - 1.0) < 1e-14
    counts = CorrelationAccumulator.from_arrays(np.full(2000, 4), np.full(2000, 4), (0,), 10)
    # factorial moment of a constant count N is (N - 1) / N
    assert abs(g2_auto_zero(counts, "a").value - 0.75) < 1e-14
    assert abs(g2_auto_zero(counts, "a", factorial=False).value - 1.0) < 1e-14


def test_poisson_counts_have_unit_factorial_moment():
    rng = np.random.default_rng(0)
    c = rng.poisson(0.7, 400_000)
    acc = CorrelationAccumulator.from_arrays(c, c, (0,), 100)
    est = g2_auto_zero(acc, "a")
    assert abs(est.value - 1.0) < 4 * est.stderr + 1e-3


@settings(max_examples=40)
@given(st.lists(st.integers(0, 9), min_size=2, max_size=400), st.data())
def test_merge_is_exact_for_counts(values, data):
    rng = np.random.default_rng(len(values))
    a = np.array(values)
    b = rng.integers(0, 9, len(a))
    cut = data.draw(st.integers(0, len(a)))
    whole = CorrelationAccumulator.from_arrays(a, b, LAGS, 7)
    left = CorrelationAccumulator.from_arrays(a[:cut], b[:cut], LAGS, 7)
    right = CorrelationAccumulator.from_arrays(a[cut:], b[cut:], LAGS, 7)
    merged = left | right
    assert np.array_equal(merged.totals(), whole.totals())
    assert np.array_equal(merged.moment_totals(), whole.moment_totals())
    assert merged.n == whole.n


@given(st.integers(0, 20))
def test_block_aligned_merge_reproduces_the_accumulator(k):
    rng = np.random.default_rng(k)
    a = rng.integers(0, 5, 300)
    b = rng.integers(0, 5, 300)
    cut = 10 * k
    whole = CorrelationAccumulator.from_arrays(a, b, LAGS, 10)
    merged = CorrelationAccumulator.from_arrays(a[:cut], b[:cut], LAGS, 10).merge(
        CorrelationAccumulator.from_arrays(a[cut:], b[cut:], LAGS, 10))
    assert merged == whole


def test_sample_by_sample_pushes_reproduce_the_accumulator():
    rng = np.random.default_rng(5)
    a = rng.integers(0, 4, 120)
    b = rng.integers(0, 4, 120)
    acc = CorrelationAccumulator(LAGS, 8)
    for x, y in zip(a, b):
        acc.push_pair(x, y)
    assert acc == CorrelationAccumulator.from_arrays(a, b, LAGS, 8)


def test_float_merge_agrees_to_rounding():
    rng = np.random.default_rng(6)
    a = rng.exponential(1.0, 5000)
    b = rng.exponential(1.0, 5000)
    whole = CorrelationAccumulator.from_arrays(a, b, LAGS, 64, integer=False)
    merged = CorrelationAccumulator.from_arrays(a[:1234], b[:1234], LAGS, 64, integer=False)
    merged.push_block(a[1234:], b[1234:])
    np.testing.assert_allclose(merged.totals(), whole.totals(), rtol=1e-12)


def test_jackknife_error_tracks_the_scatter_of_replicates():
    rng = np.random.default_rng(7)
    values, errors = [], []
    for _ in range(300):
        a = rng.exponential(1.0, 3000)
        acc = CorrelationAccumulator.from_arrays(a, a, (0,), 30, integer=False)
        e = g2_auto_zero(acc, "a")
        values.append(e.value)
        errors.append(e.stderr)
    assert abs(np.mean(errors) / np.std(values) - 1) < 0.2


def test_correlated_data_needs_long_blocks():
    assert block_length_for(750e-6, 1e-6) == 6000
    assert block_length_for(1.0, 3.0) == 3


def test_error_conditions():
    small = CorrelationAccumulator.from_arrays([1, 2, 3], [1, 2, 3], (0,), 1)
    with pytest.raises(InsufficientSamplesError):
        g2_cross_at(small, 0)
    assert abs(g2_cross_at(small, 0, min_samples=2).value - pair_ratio([1, 2, 3], [1, 2, 3], 0)) < 1e-12
    zeros = CorrelationAccumulator.from_arrays(np.zeros(2000, int), np.ones(2000, int), (0,), 10)
    assert not zeros.defined(0)
    with pytest.raises(ZeroMeanError):
        g2_cross_at(zeros, 0)
    with pytest.raises(ZeroMeanError):
        g2_auto_zero(zeros, "a")
    with pytest.raises(KeyError):
        small.lag_index(5)
    with pytest.raises(ValueError):
        small.merge(CorrelationAccumulator((0, 1), 1))
    with pytest.raises(ValueError):
        CorrelationAccumulator.from_arrays([0.5], [1], (0,), 1)
    with pytest.raises(ValueError):
        CorrelationAccumulator.from_arrays([-1], [1], (0,), 1)
    with pytest.raises(ValueError):
        CorrelationAccumulator((), 1)
    with pytest.raises(ValueError):
        CorrelationAccumulator((0,), 0)


def test_lag_longer_than_record_has_no_pairs():
    acc = CorrelationAccumulator.from_arrays(np.ones(50, int), np.ones(50, int), (0, 80), 10)
    assert acc.totals()[acc.lag_index(80)][0] == 0
    assert not acc.defined(80)


def test_channel_mean():
    rng = np.random.default_rng(8)
    a = rng.poisson(2.0, 100_000)
    acc = CorrelationAccumulator.from_arrays(a, a, (0,), 100)
    est = channel_mean(acc, "a")
    assert abs(est.value - a.mean()) < 1e-12
    assert abs(est.stderr / (a.std() / math.sqrt(len(a))) - 1) < 0.3
