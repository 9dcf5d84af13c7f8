import math

import numpy as np
import pytest

from mfunc.core import ParameterError, PrimeSet, SymPowerParams, support_interval
from mfunc.density import compute_density, single_prime_cdf
from mfunc.fourier import factor_values, fourier_product, symmetric_grid
from mfunc.moments import first_moment_sum
from mfunc.montecarlo import (characteristic_check, empirical_characteristic,
                              empirical_vs_density, sample_batch, substream)


@pytest.mark.parametrize("r", [1, 2])
def test_forced_zero_angle(r):
    params = SymPowerParams(r, 0.8)
    batch = sample_batch(PrimeSet((2,)), params, 1, 5, sampler=lambda rng, size: np.zeros(size))
    a = 2 ** -0.8
    expected = -2 * math.log(1 - a) - params.delta_even * math.log(1 - a)
    assert batch.values[0] == pytest.approx(expected, abs=1e-14)


def test_same_seed_is_bitwise_identical():
    P, params = PrimeSet.first(6), SymPowerParams(2, 0.9)
    a = sample_batch(P, params, 70000, 123)
    b = sample_batch(P, params, 70000, 123)
    c = sample_batch(P, params, 70000, 123, threads=3, block=1 << 16)
    assert a.values.tobytes() == b.values.tobytes() == c.values.tobytes()
    assert sample_batch(P, params, 100, 124).values.tobytes() != a.values[:100].tobytes()


def test_substreams_differ():
    x = substream(1, 0, 0).random(4)
    assert not np.array_equal(x, substream(1, 1, 0).random(4))
    assert not np.array_equal(x, substream(1, 0, 1).random(4))
    assert np.array_equal(x, substream(1, 0, 0).random(4))


def test_values_inside_support_exactly():
    P, params = PrimeSet.first(10), SymPowerParams(2, 0.7)
    batch = sample_batch(P, params, 200000, 77)
    lo, hi = support_interval(P, params)
    assert lo <= batch.values.min() and batch.values.max() <= hi
    ends = sample_batch(P, params, 2, 1, sampler=lambda rng, size: np.array([0.0, math.pi]))
    assert ends.values[0] <= hi and ends.values[1] >= lo


def test_bad_arguments():
    P = PrimeSet((2,))
    with pytest.raises(ParameterError):
        sample_batch(P, SymPowerParams(1, 1.0), 0, 1)
    with pytest.raises(ParameterError):
        sample_batch(P, SymPowerParams(1, 1.0), 10, -1)
    with pytest.raises(ParameterError):
        sample_batch(P, SymPowerParams(3, 1.0), 10, 1)


def test_mean_within_three_standard_errors():
    P, params = PrimeSet.first(5), SymPowerParams(1, 1.0)
    batch = sample_batch(P, params, 10 ** 6, 2024)
    se = batch.values.std() / math.sqrt(batch.n_samples)
    assert abs(batch.values.mean() - first_moment_sum(P, params)) <= 3 * se


@pytest.mark.parametrize("r", [1, 2])
def test_single_prime_histogram(r):
    params = SymPowerParams(r, 1.0)
    batch = sample_batch(PrimeSet((3,)), params, 10 ** 6, 31)
    edges = np.histogram_bin_edges(batch.values, bins="fd")
    counts, _ = np.histogram(batch.values, bins=edges)
    probs = np.diff(single_prime_cdf(3, params, edges))
    assert np.sum(np.abs(counts / batch.n_samples - probs)) <= 0.02


@pytest.fixture(scope="module")
def setup_r1():
    P, params = PrimeSet.first(25), SymPowerParams(1, 1.0)
    table, grid = compute_density(P, params)
    return P, params, grid


def test_ks_shrinks_over_doublings(setup_r1):
    P, params, grid = setup_r1
    # average over seeds so the n^{-1/2} trend is not masked by one draw's noise
    ks = [np.mean([empirical_vs_density(sample_batch(P, params, n, s), grid).ks_distance
                   for s in range(6)]) for n in (5000, 10000, 20000, 40000)]
    assert all(b < a for a, b in zip(ks, ks[1:]))


def test_law_report(setup_r1):
    P, params, grid = setup_r1
    batch = sample_batch(P, params, 200000, 8)
    rep = empirical_vs_density(batch, grid)
    assert rep.l1_distance < 0.05
    gap = rep.moment_gaps[1]
    assert gap["gap"] <= 3 * gap["standard_error"]
    assert set(rep.to_dict()) == {"l1_distance", "ks_distance", "n_bins", "moment_gaps"}


def test_mismatched_configs_rejected(setup_r1):
    P, params, grid = setup_r1
    batch = sample_batch(PrimeSet.first(24), params, 100, 1)
    with pytest.raises(ParameterError):
        empirical_vs_density(batch, grid)


def test_characteristic_at_zero_and_single_prime():
    params = SymPowerParams(2, 0.75)
    P = PrimeSet((5,))
    batch = sample_batch(P, params, 100000, 3)
    table = fourier_product(P, params, symmetric_grid(10, 21))
    res = characteristic_check(batch, table, [0.0])
    assert res["max_deviation"] <= 1e-11
    xs = np.arange(1.0, 11.0)
    res = characteristic_check(batch, table, xs)
    direct = np.abs(empirical_characteristic(batch.values, xs) - factor_values(5, params, xs))
    np.testing.assert_allclose(res["deviations"], direct, atol=1e-12)
    assert res["max_deviation"] <= res["allowance"]


def test_characteristic_converges():
    P, params = PrimeSet.first(8), SymPowerParams(1, 1.0)
    xs = np.concatenate((-np.arange(1.0, 11.0), np.arange(1.0, 11.0)))
    table = fourier_product(P, params, symmetric_grid(10, 21))
    small = characteristic_check(sample_batch(P, params, 10000, 4), table, xs)
    big = characteristic_check(sample_batch(P, params, 640000, 4), table, xs)
    assert small["max_deviation"] <= small["allowance"]
    assert big["max_deviation"] <= big["allowance"]
    assert big["max_deviation"] < small["max_deviation"]
