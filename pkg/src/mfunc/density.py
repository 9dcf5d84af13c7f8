"""Density functions by Fourier inversion, closed forms and convolution.

Normalisation follows the measure ``du / sqrt(2 pi)``: a density ``M`` has
``int M(u) du / sqrt(2 pi) = 1`` and its Fourier transform is
``int M(u) exp(i x u) du / sqrt(2 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .core import ParameterError, PrimeSet, SymPowerParams, script_g_range, support_interval
from .fourier import P0, FourierTable, product_over

SQRT2PI = math.sqrt(2.0 * math.pi)


class InversionError(ArithmeticError):
    """Fourier inversion could not meet its error budget."""


@dataclass
class DensityGrid:
    params: SymPowerParams
    prime_set: PrimeSet
    u_grid: np.ndarray
    values: np.ndarray
    mass: float = field(init=False)
    support_hint: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u_grid = np.asarray(self.u_grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.u_grid.shape != self.values.shape or self.u_grid.ndim != 1:
            raise ParameterError("u grid and values must be matching 1-d arrays")
        self.mass = integrate(self.values, self.u_grid)

    @property
    def du(self) -> float:
        return float(self.u_grid[1] - self.u_grid[0])

    def cdf(self, u):
        """Distribution function of the law ``M(u) du / sqrt(2 pi)``."""
        cum = np.concatenate(([0.0], np.cumsum(
            0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.u_grid)))) / SQRT2PI
        return np.interp(u, self.u_grid, cum, left=0.0, right=cum[-1])

    def reporting_values(self):
        """Values with numerical negatives clamped, for display only."""
        return np.maximum(self.values, 0.0)


def integrate(values, u_grid) -> float:
    """Trapezoid integral against ``du / sqrt(2 pi)``."""
    values = np.asarray(values)
    if values.size < 2:
        return 0.0
    return float(np.trapezoid(values, u_grid) / SQRT2PI)


# ---------------------------------------------------------------------------
# single prime closed form
# ---------------------------------------------------------------------------

def _prime_map(p, params):
    a = float(p) ** (-params.sigma)
    shift = -math.log1p(-a) if params.delta_even else 0.0
    return a, shift


def single_prime_angle(p: int, params: SymPowerParams, u):
    """Angle theta in [0, pi] with u(theta) = u, for u inside the support."""
    a, shift = _prime_map(p, params)
    u = np.asarray(u, dtype=np.float64)
    c = (1.0 + a * a - np.exp(-(u - shift))) / (2.0 * a)
    theta = np.arccos(np.clip(c, -1.0, 1.0))
    resid = -np.log1p(a * (a - 2.0 * np.cos(theta))) + shift - u
    scale = 1.0 + np.abs(u)
    inside = (c >= -1.0) & (c <= 1.0)
    if np.any(np.abs(resid[inside]) > 1e-12 * scale[inside]):
        raise InversionError(
            f"angle inversion residual {np.max(np.abs(resid[inside])):.3e} at p={p}")
    return theta


def density_single_prime(p: int, params: SymPowerParams, u):
    """Closed-form density of the contribution of the single prime ``p``."""
    params.require_density_degree()
    u = np.asarray(u, dtype=np.float64)
    lo, hi = script_g_range(p, params)
    a, _ = _prime_map(p, params)
    inside = (u > lo) & (u <= hi)
    out = np.zeros(u.shape)
    if np.any(inside):
        th = single_prime_angle(p, params, u[inside])
        s = np.sin(th)
        mod2 = 1.0 - 2.0 * a * np.cos(th) + a * a
        weight = 2.0 / math.pi * np.sin(th / params.r) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            jac = mod2 / (2.0 * a * s)
            val = SQRT2PI * weight * jac
        # r = 1: weight/sin -> 0 at the ends; r = 2: diverges at theta = pi
        val = np.where(s == 0, 0.0 if params.r == 1 else math.inf, val)
        out[inside] = val
    return out if out.ndim else float(out)


def single_prime_cdf(p: int, params: SymPowerParams, u):
    """Probability that the contribution of ``p`` is <= u."""
    params.require_density_degree()
    u = np.asarray(u, dtype=np.float64)
    lo, hi = script_g_range(p, params)
    out = np.where(u >= hi, 1.0, 0.0)
    inside = (u > lo) & (u < hi)
    if np.any(inside):
        th = single_prime_angle(p, params, u[inside])
        # u decreasing in theta: P(G <= u) = P(Theta >= theta(u))
        if params.r == 1:
            w = (th - np.sin(th) * np.cos(th)) / math.pi
        else:
            w = (th - np.sin(th)) / math.pi
        out[inside] = 1.0 - w
    return out if out.ndim else float(out)


def single_prime_grid(p: int, params: SymPowerParams, du: float,
                      origin: float = 0.0) -> DensityGrid:
    """Cell-averaged single-prime density on the lattice ``origin + k du``.

    Cell averages come from the exact distribution function, so the integrable
    endpoint singularity (r = 2) never gets sampled pointwise.
    """
    lo, hi = script_g_range(p, params)
    k0 = math.floor((lo - origin) / du) - 1
    k1 = math.ceil((hi - origin) / du) + 1
    u = origin + du * np.arange(k0, k1 + 1)
    edges = np.concatenate((u - 0.5 * du, [u[-1] + 0.5 * du]))
    probs = np.diff(single_prime_cdf(p, params, edges))
    values = SQRT2PI * probs / du
    return DensityGrid(params, PrimeSet((int(p),)), u, values,
                       support_hint=(float(lo), float(hi)))


def point_mass_grid(params: SymPowerParams, u0: float, du: float,
                    width: int = 1) -> DensityGrid:
    """Normalised narrow spike at ``u0`` (identity for convolution)."""
    u = u0 + du * np.arange(-width, width + 1)
    values = np.zeros(u.size)
    values[width] = SQRT2PI / du
    return DensityGrid(params, PrimeSet(()), u, values, support_hint=(u0, u0))


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def _canonical(g: DensityGrid):
    return (float(g.u_grid[0]), g.u_grid.size, g.prime_set.primes, g.values.tobytes())


def density_convolve(a: DensityGrid, b: DensityGrid) -> DensityGrid:
    """Convolution under ``du / sqrt(2 pi)``; grids must share their spacing."""
    if a.params != b.params:
        raise ParameterError("cannot convolve densities with different parameters")
    if set(a.prime_set.primes) & set(b.prime_set.primes):
        raise ParameterError("prime sets must be disjoint")
    du = a.du
    if abs(b.du - du) > 1e-9 * du:
        raise ParameterError(f"grid spacing mismatch: {a.du!r} vs {b.du!r}")
    # fixed operand order makes a*b and b*a the same computation
    first, second = sorted((a, b), key=_canonical)
    vals = fftconvolve(first.values, second.values) * du / SQRT2PI
    u0 = first.u_grid[0] + second.u_grid[0]
    u = u0 + du * np.arange(vals.size)
    hint = None
    if a.support_hint and b.support_hint:
        hint = (a.support_hint[0] + b.support_hint[0], a.support_hint[1] + b.support_hint[1])
    primes = PrimeSet(tuple(sorted(a.prime_set.primes + b.prime_set.primes)))
    return DensityGrid(a.params, primes, u, vals, support_hint=hint)


def convolved_density(P: PrimeSet, params: SymPowerParams, du: float) -> DensityGrid:
    """Density over ``P`` by successive convolution of single-prime grids."""
    P.require_nonempty()
    grid = single_prime_grid(P.primes[0], params, du)
    for p in P.primes[1:]:
        grid = density_convolve(grid, single_prime_grid(p, params, du))
    return grid


# ---------------------------------------------------------------------------
# Fourier inversion
# ---------------------------------------------------------------------------

def large_prime_count(P: PrimeSet) -> int:
    return sum(1 for p in P.primes if p > P0)


def inversion_tail_bound(table: FourierTable) -> float:
    """Bound on the inversion integral over |x| > max grid |x|.

    Uses the three-prime decay shape |M(x)| <= C (1 + |x|)^{-3/2} with C taken
    from the outer half of the table; both tails, under dx / sqrt(2 pi).
    """
    x = table.x_grid
    X = float(np.max(np.abs(x)))
    outer = np.abs(x) >= 0.5 * X
    C = float(np.max(np.abs(table.values[outer]) * (1.0 + np.abs(x[outer])) ** 1.5))
    return 4.0 * C / math.sqrt(1.0 + X) / SQRT2PI


def density_invert(table: FourierTable, u_grid, tol: float = 1e-6,
                   imag_tol: float = 1e-8) -> DensityGrid:
    """Trapezoid inversion ``M(u) = int M~(x) exp(-iux) dx / sqrt(2 pi)``."""
    P = table.prime_set
    if large_prime_count(P) < 3:
        raise ParameterError(
            f"inversion needs at least 3 primes > {P0} for integrability; "
            f"got {large_prime_count(P)}")
    x = table.x_grid
    if x.size < 3:
        raise ParameterError("x grid too small for inversion")
    tail = inversion_tail_bound(table)
    if tail > tol:
        X = float(np.max(np.abs(x)))
        C = tail * SQRT2PI * math.sqrt(1.0 + X) / 4.0
        need = (4.0 * C / (SQRT2PI * tol)) ** 2 - 1.0
        raise InversionError(
            f"inversion tail bound {tail:.3e} exceeds {tol:.1e}; extend the x grid "
            f"to |x| >= {need:.4g}")
    u = np.asarray(u_grid, dtype=np.float64)
    dx = table.dx
    w = np.full(x.size, dx)
    w[0] = w[-1] = 0.5 * dx
    coef = table.values * w
    out = np.empty(u.size, dtype=np.complex128)
    step = max(1, (1 << 21) // x.size)
    for s in range(0, u.size, step):
        ph = np.multiply.outer(u[s:s + step], x)
        out[s:s + step] = (np.cos(ph) - 1j * np.sin(ph)) @ coef
    out /= SQRT2PI
    imag = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if imag > imag_tol:
        raise InversionError(f"imaginary residue {imag:.3e} exceeds {imag_tol:.1e}")
    period = 2.0 * math.pi / dx
    s_lo, s_hi = support_interval(P, table.params)
    reach = max(u[-1] - s_lo, s_hi - u[0]) if u.size else 0.0
    meta = {
        "x_max": float(np.max(np.abs(x))),
        "dx": dx,
        "tail_bound": tail,
        "imag_residue": imag,
        "alias_period": period,
        "alias_free": bool(period > reach),
    }
    return DensityGrid(table.params, P, u, out.real, support_hint=(s_lo, s_hi), meta=meta)


def retransform(grid: DensityGrid, x) -> np.ndarray:
    """Fourier transform of a density grid by the trapezoid rule."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    w = np.full(grid.u_grid.size, grid.du)
    w[0] = w[-1] = 0.5 * grid.du
    coef = grid.values * w / SQRT2PI
    ph = np.multiply.outer(x, grid.u_grid)
    return (np.cos(ph) + 1j * np.sin(ph)) @ coef


# ---------------------------------------------------------------------------
# grid planning
# ---------------------------------------------------------------------------

@dataclass
class GridPlan:
    x_max: float
    dx: float
    u_lo: float
    u_hi: float
    du: float

    def x_grid(self) -> np.ndarray:
        n = int(round(self.x_max / self.dx))
        return self.dx * np.arange(-n, n + 1)

    def u_grid(self) -> np.ndarray:
        n = int(math.ceil((self.u_hi - self.u_lo) / self.du))
        return self.u_lo + self.du * np.arange(n + 1)


def plan_grids(P: PrimeSet, params: SymPowerParams, tol: float = 1e-7,
               pad: Optional[float] = None, x_start: float = 32.0,
               x_limit: float = 1.0e4, quad_tol: float = 1e-11, u_points: int = 2000,
               threads: Optional[int] = None) -> GridPlan:
    """Choose x and u grids for inverting the product over ``P``.

    The u window covers the analytic support plus padding; the x spacing keeps
    aliased copies of the support out of that window; the x extent doubles until
    the inversion tail bound drops below ``tol``.
    """
    s_lo, s_hi = support_interval(P, params)
    width = s_hi - s_lo
    if pad is None:
        pad = max(0.5, 0.25 * width)
    u_lo, u_hi = s_lo - pad, s_hi + pad
    dx = 2.0 * math.pi / (1.1 * (u_hi - s_lo + pad))
    X = x_start
    while True:
        n = int(math.ceil(X / dx))
        x = dx * np.arange(0, n + 1)
        vals = product_over(P.primes, params, x[x >= 0.5 * x[-1]], quad_tol, threads=threads)
        xo = x[x >= 0.5 * x[-1]]
        C = float(np.max(np.abs(vals) * (1.0 + xo) ** 1.5))
        tail = 4.0 * C / math.sqrt(1.0 + xo[-1]) / SQRT2PI
        if tail < tol:
            break
        X *= 2.0
        if X > x_limit:
            raise InversionError(
                f"Fourier product does not decay below the tail budget by |x| = {x_limit:g}")
    X = float(n * dx)
    du = min(math.pi / X, (u_hi - u_lo) / u_points)
    return GridPlan(X, dx, u_lo, u_hi, du)


def compute_density(P: PrimeSet, params: SymPowerParams, tol: float = 1e-7,
                    pad: Optional[float] = None, quad_tol: float = 1e-11,
                    threads: Optional[int] = None):
    """Plan grids, build the Fourier table and invert it.

    Returns ``(table, grid)``.
    """
    from .fourier import fourier_product

    params.require_density_degree()
    plan = plan_grids(P, params, tol, pad, quad_tol=quad_tol, threads=threads)
    table = fourier_product(P, params, plan.x_grid(), quad_tol=quad_tol, threads=threads)
    grid = density_invert(table, plan.u_grid(), tol=tol)
    return table, grid


def mass_outside(grid: DensityGrid, lo: float, hi: float) -> float:
    """Integral of the density outside ``[lo, hi]``."""
    u, v = grid.u_grid, grid.values
    total = 0.0
    left = u <= lo
    if np.count_nonzero(left) > 1:
        total += integrate(v[left], u[left])
    right = u >= hi
    if np.count_nonzero(right) > 1:
        total += integrate(v[right], u[right])
    return total
