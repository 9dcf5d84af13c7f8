"""Monte Carlo oracle under the Sato-Tate law.

Every (prime index, sample block) pair owns its own Philox stream, keyed by
``SeedSequence(seed, spawn_key=(prime_index, block_index))``, so batches are
reproducible regardless of how blocks are scheduled across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import ParameterError, PrimeSet, SymPowerParams, sato_tate_sample, script_g_p, \
    support_interval
from .density import SQRT2PI, DensityGrid
from .fourier import FourierTable, thread_count

BLOCK = 1 << 16


def substream(seed: int, prime_index: int, block_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(prime_index, block_index))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SampleBatch:
    params: SymPowerParams
    prime_set: PrimeSet
    seed: int
    n_samples: int
    values: np.ndarray
    angles: Optional[np.ndarray] = None

    def support(self):
        return support_interval(self.prime_set, self.params)


def sample_batch(P: PrimeSet, params: SymPowerParams, n: int, seed: int,
                 sampler: Optional[Callable] = None, keep_angles: bool = False,
                 block: int = BLOCK, threads: Optional[int] = None) -> SampleBatch:
    """Draw ``n`` values of the truncated log L over ``P``.

    ``sampler(rng, size)`` replaces the Sato-Tate sampler (debugging hook).
    """
    params.require_density_degree()
    if n < 1:
        raise ParameterError("need at least one sample")
    if seed < 0 or seed >= 1 << 64:
        raise ParameterError("seed must be a 64-bit unsigned integer")
    draw = sampler or sato_tate_sample
    primes = np.asarray(P.primes, dtype=np.float64)
    values = np.zeros(n)
    angles = np.empty((n, len(P))) if keep_angles else None

    def run(b):
        lo, hi = b * block, min(n, (b + 1) * block)
        acc = np.zeros(hi - lo)
        for i, p in enumerate(primes):
            theta = np.asarray(draw(substream(seed, i, b), hi - lo), dtype=np.float64)
            acc += script_g_p(params.r * theta, p, params)
            if angles is not None:
                angles[lo:hi, i] = theta
        values[lo:hi] = acc

    nblocks = (n + block - 1) // block
    threads = thread_count() if threads is None else threads
    if threads == 1 or nblocks == 1:
        for b in range(nblocks):
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(nblocks)))
    return SampleBatch(params, P, int(seed), int(n), values, angles)


@dataclass
class LawComparison:
    l1_distance: float
    ks_distance: float
    n_bins: int
    moment_gaps: dict = field(default_factory=dict)

    def to_dict(self):
        return {"l1_distance": self.l1_distance, "ks_distance": self.ks_distance,
                "n_bins": self.n_bins, "moment_gaps": self.moment_gaps}


def _same_config(batch, other):
    if batch.params != other.params or batch.prime_set.primes != other.prime_set.primes:
        raise ParameterError("batch and reference were built for different configurations")


def empirical_vs_density(batch: SampleBatch, grid: DensityGrid, bins="fd") -> LawComparison:
    """Compare the sample law with a density grid.

    Histogram bins default to Freedman-Diaconis; the density is integrated over
    each bin (via its distribution function) rather than sampled at midpoints.
    """
    _same_config(batch, grid)
    if grid.u_grid.size < 2 or not grid.mass > 0:
        raise ParameterError("degenerate density grid")
    v = batch.values
    n = v.size
    edges = np.histogram_bin_edges(v, bins=bins)
    counts, _ = np.histogram(v, bins=edges)
    p_hat = counts / n
    F_edges = grid.cdf(edges)
    p_den = np.diff(F_edges)
    outside = F_edges[0] + (grid.cdf(grid.u_grid[-1]) - F_edges[-1])
    l1 = float(np.sum(np.abs(p_hat - p_den)) + abs(outside))

    s = np.sort(v)
    F = grid.cdf(s)
    i = np.arange(1, n + 1)
    ks = float(max(np.max(np.abs(i / n - F)), np.max(np.abs(F - (i - 1) / n))))

    gaps = {}
    u, w = grid.u_grid, grid.values
    for k in (1, 2):
        dens = float(np.trapezoid(w * u ** k, u) / SQRT2PI)
        vk = v ** k
        emp = float(np.mean(vk))
        se = float(np.std(vk) / math.sqrt(n))
        gaps[k] = {"empirical": emp, "density": dens, "gap": abs(emp - dens),
                   "standard_error": se}
    return LawComparison(l1, ks, int(edges.size - 1), gaps)


def empirical_characteristic(values: np.ndarray, xs) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    out = np.empty(xs.size, dtype=np.complex128)
    for k, x in enumerate(xs):
        ph = x * values
        out[k] = complex(np.mean(np.cos(ph)), np.mean(np.sin(ph)))
    return out


def characteristic_check(batch: SampleBatch, table: FourierTable, xs) -> dict:
    """Max over ``xs`` of |mean(exp(i x V)) - table(x)|, with its CLT allowance."""
    _same_config(batch, table)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    emp = empirical_characteristic(batch.values, xs)
    ref = table.at(xs)
    dev = np.abs(emp - ref)
    return {
        "max_deviation": float(np.max(dev)) if dev.size else 0.0,
        "deviations": dev.tolist(),
        "allowance": 4.0 / math.sqrt(batch.n_samples) + table.quad_tol,
    }
