import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfunc.core import ParameterError, PrimeSet, SymPowerParams
from mfunc.moments import (MomentReport, cauchy_vanishing_check, expected_log_series,
                           expected_log_single, expected_power_single, first_moment_sum,
                           first_moment_tail)


@pytest.mark.parametrize("p,s", [(2, 0.6), (3, 1.0), (101, 0.75)])
def test_expected_log_single_closed_forms(p, s):
    a = p ** (-s)
    assert expected_log_single(p, SymPowerParams(1, s)) == -0.5 * a * a
    even = sum(a ** j / j for j in range(2, 400))
    assert expected_log_single(p, SymPowerParams(2, s)) == pytest.approx(even, rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 7, 53, 997]), st.floats(0.6, 2.5), st.integers(1, 6))
def test_closed_form_matches_series_and_quadrature(p, s, r):
    params = SymPowerParams(r, s)
    closed = expected_log_single(p, params)
    series, tail = expected_log_series(p, params)
    assert abs(closed - series) <= 1e-10
    assert tail < 1e-17
    if r <= 2:
        assert abs(closed - expected_power_single(p, params, 1)) <= 1e-10
    else:
        with pytest.raises(ParameterError):
            expected_power_single(p, params, 1)


def test_first_moment_example():
    val = first_moment_sum(PrimeSet((2, 3, 5)), SymPowerParams(1, 1.0))
    assert val == pytest.approx(-0.5 * (1 / 4 + 1 / 9 + 1 / 25), abs=1e-15)
    assert val == pytest.approx(-0.2005555555555, abs=1e-12)


def test_first_moment_scale_and_cutoff():
    params = SymPowerParams(2, 0.8)
    assert first_moment_sum(100, params, c=0) == 0
    assert first_moment_sum(100, params, c=3.0) == pytest.approx(
        3 * first_moment_sum(PrimeSet.upto(100), params), rel=1e-15)


def test_parity_exact():
    odd = {first_moment_sum(500, SymPowerParams(r, 0.9)) for r in (1, 3, 5)}
    even = {first_moment_sum(500, SymPowerParams(r, 0.9)) for r in (2, 4, 6)}
    assert len(odd) == 1 and len(even) == 1


def test_additivity_and_case_consistency():
    params = SymPowerParams(2, 1.0)
    P1, P2 = PrimeSet((2, 5, 11)), PrimeSet((3, 7, 13))
    joint = first_moment_sum(P1.union(P2), params)
    assert joint == pytest.approx(first_moment_sum(P1, params) + first_moment_sum(P2, params),
                                  abs=1e-16)
    case2 = first_moment_sum(1000, params)
    case1 = first_moment_sum(1000, params, excluded=3)
    assert case2 - case1 == pytest.approx(expected_log_single(3, params), abs=1e-16)


def test_tail_bound_covers_cutoff_change():
    params = SymPowerParams(1, 1.0)
    for y in (100, 1000, 10000):
        change = abs(first_moment_sum(2 * y, params) - first_moment_sum(y, params))
        assert change <= first_moment_tail(y, params)
    params = SymPowerParams(2, 1.0)
    change = abs(first_moment_sum(20000, params) - first_moment_sum(1000, params))
    assert change <= first_moment_tail(1000, params)


def test_non_prime_rejected():
    with pytest.raises(ParameterError):
        first_moment_sum(PrimeSet((2, 4)), SymPowerParams(1, 1.0))


@pytest.mark.parametrize("p,s,bound", [(2, 0.6, 1e-10), (97, 2.0, 1e-12), (2, 0.51, 1e-8)])
def test_cauchy_vanishing_examples(p, s, bound):
    assert cauchy_vanishing_check(p, s) < bound


def test_cauchy_vanishing_explicit_nodes():
    # n-point rule error is a^n / (n (1 - a^n))
    a = 2 ** -0.6
    for n in (8, 32, 64):
        bound = a ** n / (n * (1 - a ** n))
        assert cauchy_vanishing_check(2, 0.6, n) <= 1.01 * bound + 1e-16


def test_second_moment_quadrature():
    # r = 1: G = 2 sum_j a^j cos(j theta) / j, and under the Sato-Tate law
    # E[cos j cos k] = [j = k] / 2 - ([|j - k| = 2] + [j = k = 1]) / 4
    params = SymPowerParams(1, 0.8)
    a = 3 ** -0.8
    ref = math.fsum(2 * a ** (2 * j) / j ** 2 - 2 * a ** (2 * j + 2) / (j * (j + 2))
                    for j in range(1, 200)) - a * a
    got = expected_power_single(3, params, 2)
    th = math.pi * (np.arange(200000) + 0.5) / 200000
    G = -np.log1p(a * (a - 2 * np.cos(th)))
    dense = float(np.mean(2 * np.sin(th) ** 2 * G * G))
    assert got == pytest.approx(dense, abs=1e-10)
    assert ref == pytest.approx(dense, abs=1e-10)


def test_moment_report_records_discrepancies():
    rep = MomentReport(SymPowerParams(1, 1.0), (2, 3), None, -0.1,
                       numeric_from_density=-0.1004, numeric_from_mc=-0.099)
    d = rep.to_dict()
    assert d["discrepancies"]["density"] == pytest.approx(4e-4)
    assert d["discrepancies"]["montecarlo"] == pytest.approx(1e-3)
