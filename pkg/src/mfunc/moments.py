"""Closed-form moment identities.

The Sato-Tate mean of the per-prime contribution is
``sum_{j>=1} c(0; j, r) / (j p^{j sigma})``, and ``c(0; j, r)`` depends on
``r`` only through its parity: for odd ``r`` only ``j = 2`` survives (value
-1), for even ``r`` every ``j >= 2`` contributes +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import ParameterError, PrimeSet, SymPowerParams, cheb_coeff
from .density import DensityGrid, integrate
from .fourier import prime_tail_sum_bound


def expected_log_single(p: int, params: SymPowerParams) -> float:
    """Sato-Tate mean of the contribution of ``p`` (closed form by parity)."""
    a = float(p) ** (-params.sigma)
    if params.r % 2:
        return -0.5 * a * a
    return -math.log1p(-a) - a


def expected_log_series(p: int, params: SymPowerParams, tol: float = 1e-18):
    """The same mean summed term by term from the Chebyshev coefficients.

    Returns ``(value, tail_bound)``; terms are added until the bound
    ``(r + 1) a^{J+1} / ((J + 1)(1 - a))`` on the remainder drops below ``tol``.
    """
    a = float(p) ** (-params.sigma)
    terms = []
    j = 1
    while True:
        c0 = cheb_coeff(0, j, params.r)
        if c0:
            terms.append(c0 * a ** j / j)
        tail = (params.r + 1) * a ** (j + 1) / ((j + 1) * (1.0 - a))
        if tail < tol:
            break
        j += 1
    return math.fsum(terms), tail


def expected_power_single(p: int, params: SymPowerParams, k: int = 1,
                          nodes: int = 4096) -> float:
    """Sato-Tate mean of the k-th power of the contribution, by quadrature.

    The integrand is even and 2 pi periodic, so the trapezoid rule on
    ``nodes`` equispaced points is spectrally accurate. Only r = 1, 2 are
    accepted: for larger r the contribution at ``e^{i r theta}`` no longer
    carries the full trace, so its mean is not the closed form above.
    """
    params.require_density_degree()
    theta = math.pi * np.arange(nodes + 1) / nodes
    a = float(p) ** (-params.sigma)
    G = -np.log1p(a * (a - 2.0 * np.cos(params.r * theta)))
    if params.delta_even:
        G = G - math.log1p(-a)
    w = 2.0 / nodes * np.sin(theta) ** 2
    w[0] *= 0.5
    w[-1] *= 0.5
    return float(np.sum(w * G ** k))


def _as_prime_set(primes, excluded=None) -> PrimeSet:
    if isinstance(primes, PrimeSet):
        return primes
    return PrimeSet.upto(float(primes), excluded)


def first_moment_sum(primes: Union[PrimeSet, float], params: SymPowerParams,
                     c: float = 1.0, excluded: Optional[int] = None) -> float:
    """``c * sum_p sum_{j>=2} c(0; j, r) / (j p^{j sigma})``.

    ``primes`` is a prime set or a cutoff ``y`` (all primes ``<= y``, minus
    ``excluded``).
    """
    P = _as_prime_set(primes, excluded)
    if c == 0:
        return 0.0
    return c * math.fsum(expected_log_single(p, params) for p in P.primes)


def first_moment_tail(y: float, params: SymPowerParams, c: float = 1.0) -> float:
    """Bound on the part of the full prime sum coming from primes ``> y``."""
    s = prime_tail_sum_bound(y, 2.0 * params.sigma)
    if params.r % 2:
        return 0.5 * abs(c) * s
    a = y ** (-params.sigma)
    # sum_{j>=2} a^j / j <= a^2 / (2 (1 - a))
    return abs(c) * s / (2.0 * (1.0 - a))


def cauchy_vanishing_check(p: int, sigma: float, n: Optional[int] = None) -> float:
    """Modulus of the Haar mean of ``Log(1 - t p^{-sigma})`` over ``|t| = 1``.

    The n-point trapezoid rule aliases the power series only at multiples of
    ``n``, so its error is at most ``a^n / (n (1 - a^n))``; the default ``n``
    pushes that below 1e-17.
    """
    a = float(p) ** (-sigma)
    if not 0 < a < 1:
        raise ParameterError("need p^{-sigma} < 1")
    if n is None:
        n = 16
        while a ** n / (n * (1.0 - a ** n)) > 1e-17:
            n *= 2
    phi = 2.0 * math.pi * np.arange(n) / n
    vals = np.log(1.0 - np.exp(1j * phi) * a)
    mean = complex(math.fsum(vals.real) / n, math.fsum(vals.imag) / n)
    return abs(mean)


def moment_from_density(grid: DensityGrid, psi) -> float:
    """Trapezoid value of ``int M(u) psi(u) du / sqrt(2 pi)``."""
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != grid.u_grid.shape:
        raise ParameterError(
            f"test function has shape {psi.shape}, grid has {grid.u_grid.shape}")
    return integrate(grid.values * psi, grid.u_grid)


@dataclass
class MomentReport:
    params: SymPowerParams
    primes: Optional[tuple]
    cutoff: Optional[float]
    closed_form: float
    numeric_from_density: Optional[float] = None
    numeric_from_mc: Optional[float] = None
    mc_standard_error: Optional[float] = None
    tail_bound: Optional[float] = None
    discrepancies: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.numeric_from_density is not None:
            self.discrepancies["density"] = abs(self.closed_form - self.numeric_from_density)
        if self.numeric_from_mc is not None:
            self.discrepancies["montecarlo"] = abs(self.closed_form - self.numeric_from_mc)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "primes": list(self.primes) if self.primes is not None else None,
            "cutoff": self.cutoff,
            "closed_form": self.closed_form,
            "numeric_from_density": self.numeric_from_density,
            "numeric_from_mc": self.numeric_from_mc,
            "mc_standard_error": self.mc_standard_error,
            "tail_bound": self.tail_bound,
            "discrepancies": dict(self.discrepancies),
        }
