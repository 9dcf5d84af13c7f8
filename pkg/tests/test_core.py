import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mfunc.core import (ParameterError, PrimeSet, SymPowerParams, cheb_coeff, chebyshev_expansion,
                        chebyshev_u, first_primes, g_sigma, gamma_trace, is_prime, primes_upto,
                        rho, sato_tate_cdf, sato_tate_inverse_cdf, sato_tate_pdf, sato_tate_sample,
                        script_g_p, script_g_range, script_g_set, support_interval)


# --- parameters and primes -------------------------------------------------

def test_params_validation():
    with pytest.raises(ParameterError):
        SymPowerParams(0, 1.0)
    with pytest.raises(ParameterError):
        SymPowerParams(1, 0.5)
    with pytest.raises(ParameterError):
        SymPowerParams(1.5, 1.0)
    assert SymPowerParams(2, 1).delta_even == 1
    assert SymPowerParams(3, 1).delta_even == 0
    with pytest.raises(ParameterError):
        SymPowerParams(3, 1.0).require_density_degree()


def test_sieve_against_trial_division():
    ps = primes_upto(2000)
    assert list(ps) == [n for n in range(2000 + 1) if is_prime(n)]
    assert list(first_primes(25))[-1] == 97
    assert primes_upto(1).size == 0


def test_prime_set_rules():
    with pytest.raises(ParameterError):
        PrimeSet((2, 4))
    with pytest.raises(ParameterError):
        PrimeSet((3, 2))
    with pytest.raises(ParameterError):
        PrimeSet((2, 3), excluded=2)
    P = PrimeSet.upto(30, excluded=2)
    assert 2 not in P.primes and P.excluded == 2
    assert PrimeSet.first(5, excluded=3).primes == (2, 5, 7, 11, 13)
    assert PrimeSet.upto(20).without(7).primes == (2, 3, 5, 11, 13, 17, 19)
    with pytest.raises(ParameterError):
        PrimeSet((2, 3)).union(PrimeSet((3,)))


# --- g_sigma and the per-prime contribution ---------------------------------

def test_g_sigma_spot_values():
    assert g_sigma(0, 5, 1.0) == 0
    assert g_sigma(1, 2, 1.0).real == pytest.approx(0.6931471805599453, abs=1e-15)


def test_g_sigma_against_high_precision():
    mpmath.mp.dps = 50
    t = mpmath.exp(1j * mpmath.pi / 3)
    ref = -mpmath.log(1 - t * mpmath.mpf(3) ** mpmath.mpf("-0.75"))
    got = g_sigma(cmath.exp(1j * math.pi / 3), 3, 0.75)
    assert abs(got - complex(ref)) < 1e-15


def test_g_sigma_rejects_bad_input():
    with pytest.raises(ParameterError):
        g_sigma(1, 2, 0.5)
    with pytest.raises(ParameterError):
        g_sigma(2, 2, 1.0)


@pytest.mark.parametrize("p,s", [(2, 1.0), (7, 0.6), (101, 2.0)])
def test_script_g_quarter_turn(p, s):
    assert script_g_p(math.pi / 2, p, SymPowerParams(1, s)) == pytest.approx(
        -math.log(1 + p ** (-2 * s)), rel=1e-14)


def test_script_g_endpoint_values():
    assert script_g_p(0.0, 2, SymPowerParams(1, 1.0)) == pytest.approx(1.3862943611, abs=1e-10)
    assert script_g_p(0.0, 2, SymPowerParams(2, 1.0)) == pytest.approx(2.0794415417, abs=1e-10)


def test_script_g_is_twice_real_part_of_g_sigma():
    for eta in np.linspace(0, math.pi, 7):
        t = cmath.exp(1j * eta)
        assert script_g_p(eta, 11, SymPowerParams(1, 0.8)) == pytest.approx(
            2 * g_sigma(t, 11, 0.8).real, abs=1e-14)


def test_script_g_set():
    params = SymPowerParams(1, 1.0)
    assert script_g_set([], PrimeSet(()), params) == 0
    assert script_g_set([0.7], PrimeSet((5,)), params) == pytest.approx(
        script_g_p(0.7, 5, params), abs=0)
    assert script_g_set([0.0, 0.0], PrimeSet((2, 3)), params) == pytest.approx(
        2.1972245773, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([2, 3, 13, 997]), st.floats(0.55, 3.0), st.integers(1, 6),
       st.floats(0.0, math.pi))
def test_script_g_extremes(p, s, r, eta):
    params = SymPowerParams(r, s)
    lo, hi = script_g_range(p, params)
    v = script_g_p(eta, p, params)
    assert lo - 1e-14 <= v <= hi + 1e-14
    assert hi == script_g_p(0.0, p, params)
    assert lo == script_g_p(math.pi, p, params)


def test_support_interval_is_sum_of_ranges():
    P = PrimeSet.first(10)
    params = SymPowerParams(2, 0.9)
    lo, hi = support_interval(P, params)
    ranges = [script_g_range(p, params) for p in P.primes]
    assert lo == pytest.approx(sum(a for a, _ in ranges), abs=1e-13)
    assert hi == pytest.approx(sum(b for _, b in ranges), abs=1e-13)


# --- Sato-Tate law -----------------------------------------------------------

def test_sato_tate_spot_values():
    assert sato_tate_pdf(math.pi / 2) == pytest.approx(0.6366197724, abs=1e-10)
    assert sato_tate_cdf(0.0) == 0.0
    assert sato_tate_cdf(math.pi) == pytest.approx(1.0, abs=1e-15)


def test_sato_tate_pdf_integrates_to_one():
    val, _ = integrate.quad(sato_tate_pdf, 0, math.pi, epsabs=1e-14)
    assert abs(val - 1) < 1e-12


def test_cdf_matches_integrated_pdf():
    for th in (0.3, 1.1, 2.5):
        val, _ = integrate.quad(sato_tate_pdf, 0, th, epsabs=1e-14)
        assert sato_tate_cdf(th) == pytest.approx(val, abs=1e-13)


def test_inverse_cdf_round_trip():
    u = np.linspace(0, 1, 10001)
    th = sato_tate_inverse_cdf(u)
    assert np.all((th >= 0) & (th <= math.pi))
    assert np.max(np.abs(sato_tate_cdf(th) - u)) < 1e-12


def test_sampler_moments():
    rng = np.random.default_rng(7)
    th = sato_tate_sample(rng, 10 ** 6)
    n = th.size
    for f, target in ((np.cos(th), 0.0), (np.cos(2 * th), -0.5)):
        assert abs(f.mean() - target) <= 3 * f.std() / math.sqrt(n)


# --- Chebyshev machinery -----------------------------------------------------

def test_chebyshev_u_spot_values():
    assert chebyshev_u(0, 0.37) == 1
    assert abs(chebyshev_u(2, math.cos(math.pi / 3))) < 1e-15
    th = math.acos(0.3)
    assert chebyshev_u(5, 0.3) == pytest.approx(math.sin(6 * th) / math.sin(th), abs=1e-12)


def test_chebyshev_orthonormality():
    nodes = 512
    th = math.pi * (np.arange(nodes) + 0.5) / nodes
    w = 2.0 / nodes * np.sin(th) ** 2
    U = np.array([chebyshev_u(a, np.cos(th)) for a in range(13)])
    gram = (U * w) @ U.T
    assert np.max(np.abs(gram - np.eye(13))) < 1e-10


def test_rho_reading():
    assert [rho(r) for r in range(1, 7)] == [0, 0, 1, 1, 2, 2]


def test_cheb_coeff_spot_values():
    assert all(cheb_coeff(0, 1, r) == 0 for r in range(1, 10))
    assert cheb_coeff(0, 2, 1) == -1
    assert all(cheb_coeff(0, j, 2) == 1 for j in range(2, 10))


def test_cheb_coeff_against_quadrature():
    from mfunc.acceptance import cheb_coeff_quadrature
    assert abs(cheb_coeff(4, 2, 2) - cheb_coeff_quadrature(4, 2, 2)) < 1e-10


def test_cheb_coeff_bound_and_support():
    for r in range(1, 7):
        for j in range(1, 6):
            for ell in range(0, j * r + 6):
                c = cheb_coeff(ell, j, r)
                assert abs(c) <= r + 1
                if ell > j * r:
                    assert c == 0


def test_gamma_trace_spot_values():
    assert gamma_trace(1, 0.4, 1) == pytest.approx(2 * math.cos(0.4), abs=1e-15)
    assert gamma_trace(1, math.pi / 2, 2) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ParameterError):
        gamma_trace(0, 0.4, 1)


def test_trace_equals_chebyshev_expansion():
    rng = np.random.default_rng(11)
    th = rng.uniform(0, math.pi, 100)
    for j in range(1, 7):
        for r in range(1, 6):
            diff = gamma_trace(j, th, r) - chebyshev_expansion(j, th, r)
            assert np.max(np.abs(diff)) < 1e-10
            assert np.max(np.abs(gamma_trace(j, th, r))) <= r + 1 + 1e-12
