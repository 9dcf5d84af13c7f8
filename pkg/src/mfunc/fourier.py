"""Per-prime Fourier factors and their Euler products.

The factor at a prime ``p`` is the characteristic function of the per-prime
contribution under the Sato-Tate law,

    (2/pi) int_0^pi exp(i x F(theta)) sin^2(theta / r) d theta,

with ``F(theta) = -log(1 - 2 a cos theta + a^2) - log(1 - delta a)`` and
``a = p^{-sigma}``. For r = 1, 2 the integrand is even and 2 pi periodic, so
the trapezoid rule on equispaced nodes converges geometrically; the quadrature
doubles the node count (reusing old nodes) until successive estimates agree.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ParameterError, PrimeSet, SymPowerParams, primes_upto

# Regression constants for |M_p(x) - 1| <= K (|x| + x^2) p^{-2 sigma}
# (p >= 11, |x| <= 10).  NEAR_ONE_K_FITTED is the observed supremum over
# r in {1, 2}, sigma in {0.6, 0.75, 1.0}, primes 11..499, |x| <= 10.
NEAR_ONE_K_FITTED = 0.5683
NEAR_ONE_K = 2.0 * NEAR_ONE_K_FITTED

# Observed sup of |M_p(x)| sqrt(1 + |x|) / p^sigma over primes 11..997 and
# |x| <= 400, keyed by (r, sigma); DECAY_C carries a 1.5x margin.
DECAY_SUP_FITTED = {
    (1, 0.6): 0.3723, (1, 0.75): 0.2966, (1, 1.0): 0.2087,
    (2, 0.6): 0.3927, (2, 0.75): 0.3101, (2, 1.0): 0.2156,
}
DECAY_C = {key: 1.5 * val for key, val in DECAY_SUP_FITTED.items()}

# Smallest prime assumed to be in the decay regime.
P0 = 7

_BLOCK = 256
_MIN_NODES = 16
_CHUNK_ELEMS = 1 << 20


class QuadratureError(ArithmeticError):
    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


def thread_count() -> int:
    try:
        n = int(os.environ.get("MFUNC_THREADS", "0"))
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


@dataclass(frozen=True)
class FourierFactorSpec:
    params: SymPowerParams
    p: int
    quad_tol: float = 1e-11
    quad_max_subdiv: int = 18

    def __post_init__(self):
        self.params.require_density_degree()
        if not self.quad_tol > 0:
            raise ParameterError("quad_tol must be positive")
        if self.p < 2:
            raise ParameterError("p must be prime")


def _phase_and_weight(a: float, params: SymPowerParams, theta: np.ndarray):
    F = -np.log1p(a * (a - 2.0 * np.cos(theta)))
    if params.delta_even:
        F = F - math.log1p(-a)
    w = np.sin(theta / params.r) ** 2
    return F, w


def _trapezoid_block(x, F, w, scale):
    out = np.empty(x.size, dtype=np.complex128)
    step = max(1, _CHUNK_ELEMS // max(1, F.size))
    for s in range(0, x.size, step):
        ph = np.multiply.outer(x[s:s + step], F)
        out[s:s + step] = np.cos(ph) @ w + 1j * (np.sin(ph) @ w)
    return out * scale


def factor_values(p: int, params: SymPowerParams, x, quad_tol: float = 1e-11,
                  quad_max_subdiv: int = 18) -> np.ndarray:
    """Fourier factor at prime ``p`` for every entry of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape, dtype=np.complex128)
    flat = x.ravel()
    res = out.reshape(-1)
    a = float(p) ** (-params.sigma)
    spread = 2.0 * (math.log1p(a) - math.log1p(-a))  # max F - min F
    order = np.argsort(np.abs(flat), kind="stable")
    for start in range(0, flat.size, _BLOCK):
        idx = order[start:start + _BLOCK]
        xb = flat[idx]
        xmax = float(np.max(np.abs(xb))) if xb.size else 0.0
        n = _MIN_NODES
        while n < xmax * spread:
            n *= 2
        theta = math.pi * np.arange(n + 1) / n
        F, w = _phase_and_weight(a, params, theta)
        w[0] *= 0.5
        w[-1] *= 0.5
        cur = _trapezoid_block(xb, F, w, 2.0 / n)
        err = math.inf
        for _ in range(quad_max_subdiv):
            theta = math.pi * (2 * np.arange(n) + 1) / (2 * n)
            F, w = _phase_and_weight(a, params, theta)
            nxt = 0.5 * cur + _trapezoid_block(xb, F, w, 1.0 / n)
            n *= 2
            err = float(np.max(np.abs(nxt - cur)))
            cur = nxt
            if err <= quad_tol:
                break
        else:
            raise QuadratureError(
                f"Fourier factor at p={p} did not converge with {n} nodes", err)
        res[idx] = cur
    return out


def fourier_factor(spec: FourierFactorSpec, x):
    vals = factor_values(spec.p, spec.params, x, spec.quad_tol, spec.quad_max_subdiv)
    return vals if vals.ndim else complex(vals)


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def symmetric_grid(xmax: float, n: int) -> np.ndarray:
    if n < 1 or xmax < 0:
        raise ParameterError("grid needs n >= 1 and xmax >= 0")
    if n == 1:
        return np.zeros(1)
    return np.linspace(-xmax, xmax, n)


def _check_symmetric(x: np.ndarray):
    if x.ndim != 1 or not x.size:
        raise ParameterError("x grid must be a nonempty 1-d array")
    if np.max(np.abs(x + x[::-1])) > 1e-9 * max(1.0, float(np.max(np.abs(x)))):
        raise ParameterError("x grid must be symmetric about 0")
    if x.size > 2:
        d = np.diff(x)
        if np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]):
            raise ParameterError("x grid must be uniform")


@dataclass
class FourierTable:
    """Euler product of Fourier factors sampled on a symmetric uniform grid."""

    params: SymPowerParams
    prime_set: PrimeSet
    x_grid: np.ndarray
    values: np.ndarray
    tail_tol: float = 1e-8
    tail_bound_x: float = math.inf
    cutoff: Optional[float] = None
    truncation_bound: float = 0.0
    quad_tol: float = 1e-11
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tail_bound_x = decay_point(self.x_grid, self.values, self.tail_tol)

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0]) if self.x_grid.size > 1 else 0.0

    def at(self, x):
        """Table value at grid points ``x`` (nearest node, must coincide)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        idx = np.rint((x - self.x_grid[0]) / self.dx).astype(int) if self.dx else np.zeros(x.size, int)
        if np.any(idx < 0) or np.any(idx >= self.x_grid.size) or \
                np.max(np.abs(self.x_grid[idx] - x)) > 1e-9 * max(1.0, self.dx):
            raise ParameterError("requested x values are not grid points")
        return self.values[idx]


def decay_point(x: np.ndarray, values: np.ndarray, tol: float) -> float:
    """Smallest grid |x| beyond which every tabulated |value| is below ``tol``."""
    big = np.abs(x)[np.abs(values) >= tol]
    if not big.size:
        return 0.0
    edge = float(np.max(big))
    beyond = np.abs(x)[np.abs(x) > edge]
    return float(np.min(beyond)) if beyond.size else math.inf


def product_over(primes, params: SymPowerParams, x: np.ndarray, quad_tol=1e-11,
                 quad_max_subdiv=18, threads: Optional[int] = None) -> np.ndarray:
    """Ascending-prime product of factors at points ``x`` (no symmetry used)."""
    primes = [int(p) for p in primes]
    total = np.ones(x.shape, dtype=np.complex128)
    if not primes:
        return total
    threads = thread_count() if threads is None else threads

    def one(p):
        return factor_values(p, params, x, quad_tol, quad_max_subdiv)

    chunk = max(1, 4 * threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, len(primes), chunk):
            for f in pool.map(one, primes[start:start + chunk]):
                total *= f
    return total


def fourier_product(P: PrimeSet, params: SymPowerParams, x_grid, quad_tol: float = 1e-11,
                    quad_max_subdiv: int = 18, tail_tol: float = 1e-8,
                    threads: Optional[int] = None) -> FourierTable:
    """Product of per-prime factors over ``P`` on a symmetric uniform grid."""
    params.require_density_degree()
    P.require_nonempty()
    x = np.asarray(x_grid, dtype=np.float64)
    _check_symmetric(x)
    n = x.size
    half = n // 2  # x[half:] >= 0
    pos = np.abs(x[half:])
    vals_pos = product_over(P.primes, params, pos, quad_tol, quad_max_subdiv, threads)
    values = np.empty(n, dtype=np.complex128)
    values[half:] = vals_pos
    values[:n - half] = np.conj(vals_pos[::-1])[: n - half]
    return FourierTable(params, P, x, values, tail_tol=tail_tol, quad_tol=quad_tol)


# ---------------------------------------------------------------------------
# Euler product limit
# ---------------------------------------------------------------------------

def prime_tail_sum_bound(y: float, exponent: float) -> float:
    """Bound for sum_{p > y} p^{-exponent} by int_y^inf t^{-exponent} dt."""
    if exponent <= 1:
        return math.inf
    return y ** (1.0 - exponent) / (exponent - 1.0)


def truncation_bound(y: float, xmax: float, sigma: float, k: float = NEAR_ONE_K) -> float:
    """Bound on |product over p <= y - full product| for |x| <= xmax."""
    return k * (xmax + xmax * xmax) * prime_tail_sum_bound(y, 2.0 * sigma)


def required_cutoff(target_tol: float, xmax: float, sigma: float,
                    k: float = NEAR_ONE_K) -> float:
    """Least y with ``truncation_bound(y) < target_tol``."""
    if xmax == 0:
        return 0.0
    s = 2.0 * sigma - 1.0
    log_y = math.log(k * (xmax + xmax * xmax) / (s * target_tol)) / s
    return math.exp(log_y) if log_y < 700.0 else math.inf


def fourier_limit(params: SymPowerParams, target_tol: float, x_grid,
                  exclusion: Optional[int] = None, y_min: float = 29.0,
                  y_budget: float = 2.0e6, quad_tol: float = 1e-11,
                  quad_max_subdiv: int = 18, tail_tol: float = 1e-8,
                  threads: Optional[int] = None) -> FourierTable:
    """Truncated Euler product whose distance to the infinite product is provably
    below ``target_tol`` on the grid (given the frozen near-1 constant)."""
    if not target_tol > 0:
        raise ParameterError("target_tol must be positive")
    x = np.asarray(x_grid, dtype=np.float64)
    xmax = float(np.max(np.abs(x)))
    y = max(y_min, required_cutoff(target_tol, xmax, params.sigma))
    if y > y_budget:
        raise ParameterError(
            f"target_tol={target_tol:g} at sigma={params.sigma:g}, |x|<={xmax:g} "
            f"requires primes up to y={y:.4g}, beyond the budget {y_budget:.4g}")
    y = math.ceil(y)
    P = PrimeSet(tuple(int(p) for p in primes_upto(y) if p != exclusion), exclusion)
    table = fourier_product(P, params, x, quad_tol, quad_max_subdiv, tail_tol, threads)
    table.cutoff = float(y)
    table.truncation_bound = truncation_bound(y, xmax, params.sigma)
    return table
