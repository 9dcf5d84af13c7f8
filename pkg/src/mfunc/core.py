"""Elementary building blocks.

Principal-branch log Euler factors, the per-prime and summed log L
contributions, the Sato-Tate law (density, distribution function, inverse-CDF
sampler), Chebyshev polynomials of the second kind and the integer
coefficients of the Chebyshev expansion of the symmetric power traces.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class ParameterError(ValueError):
    """Invalid input to one of the numerical routines."""


# ---------------------------------------------------------------------------
# parameters and prime sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymPowerParams:
    """Symmetric power degree ``r`` and real point ``sigma > 1/2``."""

    r: int
    sigma: float
    delta_even: int = field(init=False)

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ParameterError(f"r must be a positive integer, got {self.r!r}")
        if not math.isfinite(self.sigma) or self.sigma <= 0.5:
            raise ParameterError(f"sigma must exceed 1/2, got {self.sigma!r}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "delta_even", 1 if self.r % 2 == 0 else 0)

    def require_density_degree(self):
        if self.r not in (1, 2):
            raise ParameterError(
                f"densities are only constructed for r in (1, 2), got r={self.r}")

    def to_dict(self) -> dict:
        return {"r": self.r, "sigma": self.sigma}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes_upto(y: float) -> np.ndarray:
    """All primes ``p <= y`` (sieve of Eratosthenes)."""
    n = int(math.floor(y))
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for d in range(3, int(math.isqrt(n)) + 1, 2):
        if sieve[d]:
            sieve[d * d::2 * d] = False
    return np.flatnonzero(sieve).astype(np.int64)


def first_primes(k: int) -> np.ndarray:
    if k <= 0:
        return np.zeros(0, dtype=np.int64)
    # p_k < k (log k + log log k) for k >= 6
    bound = 15 if k < 6 else int(k * (math.log(k) + math.log(math.log(k)))) + 1
    return primes_upto(bound)[:k]


@dataclass(frozen=True)
class PrimeSet:
    """Ordered finite set of primes, optionally excluding a prime ``q``.

    ``excluded`` is set for Case I (level ``q^m``, primes ``!= q``) and left as
    ``None`` for Case II.
    """

    primes: tuple
    excluded: Optional[int] = None

    def __post_init__(self):
        primes = tuple(int(p) for p in self.primes)
        for p in primes:
            if not is_prime(p):
                raise ParameterError(f"{p} is not prime")
        if any(b <= a for a, b in zip(primes, primes[1:])):
            raise ParameterError("primes must be strictly increasing")
        if self.excluded is not None:
            if not is_prime(int(self.excluded)):
                raise ParameterError(f"excluded value {self.excluded} is not prime")
            if int(self.excluded) in primes:
                raise ParameterError(f"excluded prime {self.excluded} is in the set")
            object.__setattr__(self, "excluded", int(self.excluded))
        object.__setattr__(self, "primes", primes)

    @classmethod
    def upto(cls, y: float, excluded: Optional[int] = None) -> "PrimeSet":
        ps = [int(p) for p in primes_upto(y) if p != excluded]
        return cls(tuple(ps), excluded)

    @classmethod
    def first(cls, k: int, excluded: Optional[int] = None) -> "PrimeSet":
        ps = [int(p) for p in first_primes(k + 1) if p != excluded][:k]
        return cls(tuple(ps), excluded)

    def __len__(self):
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def array(self) -> np.ndarray:
        return np.asarray(self.primes, dtype=np.float64)

    def require_nonempty(self):
        if not self.primes:
            raise ParameterError("prime set is empty")

    def union(self, other: "PrimeSet") -> "PrimeSet":
        if set(self.primes) & set(other.primes):
            raise ParameterError("prime sets are not disjoint")
        excluded = self.excluded if self.excluded == other.excluded else None
        return PrimeSet(tuple(sorted(self.primes + other.primes)), excluded)

    def without(self, q: int) -> "PrimeSet":
        return PrimeSet(tuple(p for p in self.primes if p != q), q)


# ---------------------------------------------------------------------------
# log Euler factors
# ---------------------------------------------------------------------------

def _check_sigma(sigma: float):
    if not sigma > 0.5:
        raise ParameterError(f"sigma must exceed 1/2, got {sigma!r}")


def g_sigma(t: complex, p: int, sigma: float) -> complex:
    """``-Log(1 - t p^{-sigma})`` on the principal branch, for ``|t| <= 1``."""
    _check_sigma(sigma)
    if p < 2:
        raise ParameterError(f"p must be a prime >= 2, got {p}")
    if abs(t) > 1.0 + 1e-12:
        raise ParameterError(f"|t| must not exceed 1, got {abs(t)!r}")
    return -cmath.log(1.0 - complex(t) * p ** (-sigma))


def script_g_p(eta, p, params: SymPowerParams):
    """Real per-prime contribution at the factor angle ``eta``.

    ``-log(1 - 2 a cos(eta) + a^2) - log(1 - delta a)`` with ``a = p^{-sigma}``.
    Callers holding a Sato-Tate angle pass ``eta = r * theta``. Vectorises over
    ``eta`` and ``p``.
    """
    a = np.asarray(p, dtype=np.float64) ** (-params.sigma)
    val = -np.log1p(a * (a - 2.0 * np.cos(eta)))
    if params.delta_even:
        val = val - np.log1p(-a)
    return val if np.ndim(val) else float(val)


def script_g_range(p, params: SymPowerParams):
    """(min, max) of the per-prime contribution, attained at eta = pi and 0."""
    return script_g_p(math.pi, p, params), script_g_p(0.0, p, params)


def support_interval(P: PrimeSet, params: SymPowerParams) -> tuple:
    """Closure of the image of the summed contribution over ``P``."""
    if not len(P):
        return 0.0, 0.0
    lo, hi = script_g_range(P.array(), params)
    # sequential ascending sums, matching the sampler's accumulation order
    s_lo = s_hi = 0.0
    for a, b in zip(lo, hi):
        s_lo += float(a)
        s_hi += float(b)
    return s_lo, s_hi


def script_g_set(thetas, P: PrimeSet, params: SymPowerParams):
    """Truncated ``log L_P(Sym^r, sigma)`` at Sato-Tate angles ``thetas``.

    ``thetas`` has one angle per prime along its last axis; leading axes are
    treated as independent samples.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.shape[-1:] != (len(P),) and not (len(P) == 0 and thetas.size == 0):
        raise ParameterError(
            f"expected {len(P)} angles, got shape {thetas.shape}")
    if not len(P):
        return 0.0
    vals = script_g_p(params.r * thetas, P.array(), params)
    total = np.sum(vals, axis=-1)
    return total if np.ndim(total) else float(total)


# ---------------------------------------------------------------------------
# Sato-Tate law
# ---------------------------------------------------------------------------

def sato_tate_pdf(theta):
    return 2.0 / math.pi * np.sin(theta) ** 2


def sato_tate_cdf(theta):
    theta = np.asarray(theta, dtype=np.float64)
    out = (theta - np.sin(theta) * np.cos(theta)) / math.pi
    return out if out.ndim else float(out)


def sato_tate_inverse_cdf(u, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Invert the Sato-Tate distribution function.

    Newton iteration from ``theta = pi u`` kept inside a shrinking bracket; any
    step leaving the bracket is replaced by bisection.
    """
    u = np.asarray(u, dtype=np.float64)
    shape = u.shape
    u = u.ravel()
    theta = math.pi * u
    lo = np.zeros_like(u)
    hi = np.full_like(u, math.pi)
    active = np.arange(u.size)
    for _ in range(max_iter):
        if not active.size:
            break
        th = theta[active]
        f = (th - np.sin(th) * np.cos(th)) / math.pi - u[active]
        neg = f < 0
        lo[active] = np.where(neg, th, lo[active])
        hi[active] = np.where(neg, hi[active], th)
        d = 2.0 / math.pi * np.sin(th) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = th - f / d
        a, b = lo[active], hi[active]
        close = np.abs(step - th) <= tol
        bad = ~close & (~np.isfinite(step) | (step <= a) | (step >= b))
        new = np.where(bad, 0.5 * (a + b), step)
        theta[active] = new
        done = close | (b - a <= tol)
        active = active[~done]
    if active.size:
        raise ArithmeticError(
            f"Sato-Tate inversion did not converge for {active.size} draws")
    return theta.reshape(shape)


def sato_tate_sample(rng: np.random.Generator, size=None):
    """Draw angles with law ``(2/pi) sin^2(theta) d theta`` on ``[0, pi]``."""
    u = rng.random(size)
    theta = sato_tate_inverse_cdf(u)
    return theta if np.ndim(theta) else float(theta)


# ---------------------------------------------------------------------------
# Chebyshev expansion of traces
# ---------------------------------------------------------------------------

def chebyshev_u(ell: int, x):
    """``U_ell(x)`` by the three-term recurrence."""
    if ell < 0:
        raise ParameterError("degree must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    u_prev, u = np.ones_like(x), 2.0 * x
    if ell == 0:
        u = u_prev
    for _ in range(ell - 1):
        u_prev, u = u, 2.0 * x * u - u_prev
    return u if u.ndim else float(u)


def rho(r: int) -> int:
    return r // 2 if r % 2 else r // 2 - 1


def trace_frequencies(j: int, r: int) -> list:
    """Frequencies ``j (r - 2h)`` for ``h = 0..rho``."""
    return [j * (r - 2 * h) for h in range(rho(r) + 1)]


def cheb_coeff(ell: int, j: int, r: int) -> int:
    """Coefficient of ``U_ell`` in the expansion of the trace at ``p^j``.

    Uses ``(2/pi) int_0^pi cos(m xi) cos(n xi) d xi = [m == n] (1 + [m == 0])``;
    the frequency ``m`` vanishes only for ``j = 0``.
    """
    if ell < 0 or j < 0 or r < 1:
        raise ParameterError("need ell, j >= 0 and r >= 1")
    c = 0
    for m in trace_frequencies(j, r):
        c += (m == ell) * (1 + (m == 0)) - (m == ell + 2)
    if r % 2 == 0 and ell == 0:
        c += 1
    return int(c)


def gamma_trace(j: int, theta, r: int):
    """``sum_h 2 cos(j (r - 2h) theta) + delta_even``; |value| <= r + 1."""
    if j < 1:
        raise ParameterError("j must be >= 1")
    theta = np.asarray(theta, dtype=np.float64)
    total = np.full_like(theta, 1.0 if r % 2 == 0 else 0.0)
    for m in trace_frequencies(j, r):
        total = total + 2.0 * np.cos(m * theta)
    return total if total.ndim else float(total)


def chebyshev_expansion(j: int, theta, r: int):
    """Right-hand side of the trace expansion, sum over ``ell <= j r``."""
    x = np.cos(np.asarray(theta, dtype=np.float64))
    total = np.zeros_like(x)
    for ell in range(j * r + 1):
        c = cheb_coeff(ell, j, r)
        if c:
            total = total + c * chebyshev_u(ell, x)
    return total if total.ndim else float(total)


def angles_in_range(thetas: Iterable[float]) -> bool:
    return all(0.0 <= t <= math.pi for t in thetas)


def validate_angles(thetas: Sequence[float]):
    if not angles_in_range(thetas):
        raise ParameterError("Sato-Tate angles must lie in [0, pi]")
