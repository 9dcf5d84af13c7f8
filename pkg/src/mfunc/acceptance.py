"""Acceptance criteria, shared by ``mfunc verify`` and the test suite.

Each criterion returns a :class:`CriterionResult`; tolerances are fixed here.
The ``desk`` preset runs every criterion at full size; ``quick`` shrinks the
fuzz and decay grids of criteria 3 and 4 only. The Monte Carlo criterion
always uses its full sample, since its tolerances are set for that size.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate as sp_integrate

from .core import PrimeSet, SymPowerParams, cheb_coeff, primes_upto, support_interval
from .density import compute_density, mass_outside
from .fourier import NEAR_ONE_K, factor_values, fourier_product, symmetric_grid
from .moments import cauchy_vanishing_check, first_moment_sum, moment_from_density
from .montecarlo import characteristic_check, empirical_vs_density, sample_batch

PRESETS = {
    "desk": {"n_samples": 10 ** 6, "fuzz_points": 10 ** 4, "decay_step": 0.125},
    "quick": {"n_samples": 10 ** 6, "fuzz_points": 2000, "decay_step": 0.5},
}

CORE_CONFIGS = ((1, 0.75), (1, 1.0), (2, 0.75), (2, 1.0))
N_PRIMES = 25


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.number:2d} {self.name:<28s} value={self.value:.3e} "
                f"tol={self.tolerance:.1e} ({self.seconds:.1f}s)")

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "value": self.value, "tolerance": self.tolerance,
                "detail": self.detail, "seconds": self.seconds}


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@lru_cache(maxsize=None)
def _density(r, sigma, n_primes=N_PRIMES):
    t0 = time.perf_counter()
    table, grid = compute_density(PrimeSet.first(n_primes), SymPowerParams(r, sigma))
    return table, grid, time.perf_counter() - t0


@_timed
def normalization(preset="desk"):
    masses, runtimes = {}, {}
    worst = 0.0
    for r, s in CORE_CONFIGS:
        _, grid, secs = _density(r, s)
        masses[f"r={r},sigma={s}"] = grid.mass
        runtimes[f"r={r},sigma={s}"] = secs
        worst = max(worst, abs(grid.mass - 1.0))
    ok = worst <= 1e-4 and max(runtimes.values()) < 60.0
    return CriterionResult(1, "normalization", ok, worst, 1e-4,
                           {"mass": masses, "runtime_s": runtimes})


@_timed
def nonnegativity_and_decay(preset="desk"):
    mins, ends = {}, {}
    for r, s in CORE_CONFIGS:
        _, grid, _ = _density(r, s)
        key = f"r={r},sigma={s}"
        mins[key] = float(np.min(grid.values))
        ends[key] = float(max(abs(grid.values[0]), abs(grid.values[-1])))
    worst_min = min(mins.values())
    worst_end = max(ends.values())
    ok = worst_min >= -1e-6 and worst_end < 1e-5
    return CriterionResult(2, "nonnegativity_and_decay", ok, max(-worst_min, worst_end), 1e-6,
                           {"min": mins, "end_values": ends, "end_tol": 1e-5})


@_timed
def trivial_bound(preset="desk", seed=20240601):
    n = PRESETS[preset]["fuzz_points"]
    rng = np.random.default_rng(seed)
    primes = primes_upto(997)
    worst = 0.0
    for sigma in (0.6, 1.0):
        for r in (1, 2):
            params = SymPowerParams(r, sigma)
            ps = rng.choice(primes, size=n)
            xs = rng.uniform(-200.0, 200.0, size=n)
            for p in np.unique(ps):
                vals = factor_values(int(p), params, xs[ps == p])
                worst = max(worst, float(np.max(np.abs(vals))))
    return CriterionResult(3, "trivial_bound", worst <= 1.0 + 1e-10, worst - 1.0, 1e-10,
                           {"max_modulus": worst, "points_per_config": n})


def decay_sup(params: SymPowerParams, xmax: float, step: float = 0.125,
              pmin: int = 11, pmax: int = 997) -> float:
    """sup over primes in [pmin, pmax] and |x| <= xmax of |M_p(x)| sqrt(1+|x|) / p^sigma."""
    x = np.arange(0.0, xmax + 0.5 * step, step)
    best = 0.0
    for p in primes_upto(pmax):
        if p < pmin:
            continue
        v = factor_values(int(p), params, x)
        best = max(best, float(np.max(np.abs(v) * np.sqrt(1.0 + x))) / p ** params.sigma)
    return best


@_timed
def decay_shape(preset="desk"):
    step = PRESETS[preset]["decay_step"]
    sups, ratios = {}, {}
    for r in (1, 2):
        for s in (0.6, 0.75, 1.0):
            params = SymPowerParams(r, s)
            a, b = decay_sup(params, 200.0, step), decay_sup(params, 400.0, step)
            sups[f"r={r},sigma={s}"] = [a, b]
            ratios[f"r={r},sigma={s}"] = b / a
    worst = max(ratios.values())
    finite = all(math.isfinite(v) for pair in sups.values() for v in pair)
    return CriterionResult(4, "decay_shape", finite and worst < 1.2, worst, 1.2,
                           {"sup_200_400": sups, "ratio": ratios})


def cheb_coeff_quadrature(ell: int, j: int, r: int) -> float:
    """Sato-Tate integral of trace times U_ell by adaptive quadrature."""
    rho = r // 2 if r % 2 else r // 2 - 1
    delta = 1.0 if r % 2 == 0 else 0.0

    def f(xi):
        trace = sum(2.0 * math.cos(j * (r - 2 * h) * xi) for h in range(rho + 1)) + delta
        # U_ell(cos xi) sin(xi) = sin((ell + 1) xi)
        return 2.0 / math.pi * trace * math.sin((ell + 1) * xi) * math.sin(xi)

    val, _ = sp_integrate.quad(f, 0.0, math.pi, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


@_timed
def chebyshev_coefficients(preset="desk"):
    worst = 0.0
    for r in range(1, 6):
        for j in range(1, 5):
            for ell in range(13):
                worst = max(worst, abs(cheb_coeff(ell, j, r) - cheb_coeff_quadrature(ell, j, r)))
    spots = {
        "c(0,1,r)=0": all(cheb_coeff(0, 1, r) == 0 for r in range(1, 13)),
        "c(0,2,1)=-1": cheb_coeff(0, 2, 1) == -1,
        "c(0,j>=2,2)=1": all(cheb_coeff(0, j, 2) == 1 for j in range(2, 13)),
    }
    ok = worst <= 1e-10 and all(spots.values())
    return CriterionResult(5, "chebyshev_coefficients", ok, worst, 1e-10, {"spot_values": spots})


@_timed
def first_moment(preset="desk"):
    gaps = {}
    for r in (1, 2):
        _, grid, _ = _density(r, 1.0)
        numeric = moment_from_density(grid, grid.u_grid)
        closed = first_moment_sum(PrimeSet.first(N_PRIMES), SymPowerParams(r, 1.0))
        gaps[f"r={r}"] = {"density": numeric, "closed_form": closed, "gap": abs(numeric - closed)}
    worst = max(g["gap"] for g in gaps.values())
    return CriterionResult(6, "first_moment", worst <= 1e-3, worst, 1e-3, gaps)


@_timed
def monte_carlo_law(preset="desk", seed=271828):
    n = PRESETS[preset]["n_samples"]
    xs = np.concatenate((-np.arange(1.0, 11.0), np.arange(1.0, 11.0)))
    detail = {}
    worst_l1 = worst_cf = 0.0
    slow = 0.0
    for r in (1, 2):
        t0 = time.perf_counter()
        params = SymPowerParams(r, 1.0)
        P = PrimeSet.first(N_PRIMES)
        _, grid, _ = _density(r, 1.0)
        batch = sample_batch(P, params, n, seed)
        law = empirical_vs_density(batch, grid)
        table = fourier_product(P, params, symmetric_grid(10.0, 21))
        cf = characteristic_check(batch, table, xs)
        secs = time.perf_counter() - t0
        slow = max(slow, secs)
        detail[f"r={r}"] = {"l1": law.l1_distance, "ks": law.ks_distance,
                            "cf_max_deviation": cf["max_deviation"], "runtime_s": secs}
        worst_l1 = max(worst_l1, law.l1_distance)
        worst_cf = max(worst_cf, cf["max_deviation"])
    cf_tol = 4e-3
    ok = worst_l1 <= 0.02 and worst_cf <= cf_tol and slow < 120.0
    detail["cf_tol"] = cf_tol
    detail["n_samples"] = n
    return CriterionResult(7, "monte_carlo_law", ok, worst_l1, 0.02, detail)


@_timed
def cauchy_vanishing(preset="desk", seed=314159):
    rng = np.random.default_rng(seed)
    primes = primes_upto(1000)
    pairs = [(int(rng.choice(primes)), float(rng.uniform(0.6, 3.0))) for _ in range(20)]
    vals = [cauchy_vanishing_check(p, s) for p, s in pairs]
    worst = max(vals)
    return CriterionResult(8, "cauchy_vanishing", worst < 1e-10, worst, 1e-10,
                           {"pairs": pairs, "values": vals})


@_timed
def case_factorization(preset="desk"):
    worst = 0.0
    x = symmetric_grid(50.0, 1001)
    for r in (1, 2):
        for s in (0.75, 1.0):
            params = SymPowerParams(r, s)
            full = fourier_product(PrimeSet.upto(200), params, x)
            case1 = fourier_product(PrimeSet.upto(200, excluded=2), params, x)
            factor = factor_values(2, params, x)
            worst = max(worst, float(np.max(np.abs(full.values - case1.values * factor))))
    return CriterionResult(9, "case_factorization", worst <= 1e-9, worst, 1e-9)


@_timed
def compact_support(preset="desk"):
    detail = {}
    worst = 0.0
    P = PrimeSet.first(N_PRIMES)
    for r in (1, 2):
        params = SymPowerParams(r, 1.2)
        _, grid, _ = _density(r, 1.2)
        lo, hi = support_interval(P, params)
        out = abs(mass_outside(grid, lo, hi))
        detail[f"r={r}"] = {"support": [lo, hi], "mass_outside": out}
        worst = max(worst, out)
    return CriterionResult(10, "compact_support", worst < 1e-4, worst, 1e-4, detail)


@_timed
def parity(preset="desk"):
    odd = [first_moment_sum(1000, SymPowerParams(r, 1.0)) for r in (1, 3, 5)]
    even = [first_moment_sum(1000, SymPowerParams(r, 1.0)) for r in (2, 4, 6)]
    ok = len(set(odd)) == 1 and len(set(even)) == 1
    spread = max(max(odd) - min(odd), max(even) - min(even))
    return CriterionResult(11, "parity", ok, spread, 0.0, {"odd": odd, "even": even})


@_timed
def near_one_expansion(preset="desk"):
    x = np.linspace(-10.0, 10.0, 401)
    x = x[x != 0]
    worst = 0.0
    for r in (1, 2):
        for s in (0.6, 0.75, 1.0):
            params = SymPowerParams(r, s)
            for p in primes_upto(499):
                if p < 11:
                    continue
                v = factor_values(int(p), params, x)
                ratio = np.abs(v - 1.0) / ((np.abs(x) + x * x) * p ** (-2.0 * s))
                worst = max(worst, float(np.max(ratio)))
    return CriterionResult(12, "near_one_expansion", worst <= NEAR_ONE_K, worst, NEAR_ONE_K,
                           {"frozen_K": NEAR_ONE_K})


CRITERIA = (
    normalization, nonnegativity_and_decay, trivial_bound, decay_shape,
    chebyshev_coefficients, first_moment, monte_carlo_law, cauchy_vanishing,
    case_factorization, compact_support, parity, near_one_expansion,
)


def criterion_number(crit) -> int:
    return CRITERIA.index(crit) + 1


def run_all(preset="desk", only=None, echo=None):
    results = []
    for crit in CRITERIA:
        if only and criterion_number(crit) not in only:
            continue
        res = crit(preset)
        results.append(res)
        if echo:
            echo(res.line())
    return results
