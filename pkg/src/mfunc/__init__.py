"""Value distribution of truncated symmetric power L-functions under the Sato-Tate law."""

from .core import (ParameterError, PrimeSet, SymPowerParams, cheb_coeff, g_sigma,
                   sato_tate_sample, script_g_p, script_g_set, support_interval)
from .fourier import (FourierTable, QuadratureError, fourier_factor, fourier_limit,
                      fourier_product, FourierFactorSpec)
from .density import (DensityGrid, InversionError, compute_density, density_convolve,
                      density_invert, density_single_prime)
from .moments import MomentReport, cauchy_vanishing_check, first_moment_sum, moment_from_density
from .montecarlo import SampleBatch, characteristic_check, empirical_vs_density, sample_batch

__version__ = "0.1.0"

__all__ = [
    "ParameterError", "PrimeSet", "SymPowerParams", "cheb_coeff", "g_sigma", "sato_tate_sample",
    "script_g_p", "script_g_set", "support_interval", "FourierTable", "QuadratureError",
    "fourier_factor", "fourier_limit", "fourier_product", "FourierFactorSpec", "DensityGrid",
    "InversionError", "compute_density", "density_convolve", "density_invert",
    "density_single_prime", "MomentReport", "cauchy_vanishing_check", "first_moment_sum",
    "moment_from_density", "SampleBatch", "characteristic_check", "empirical_vs_density",
    "sample_batch",
]
