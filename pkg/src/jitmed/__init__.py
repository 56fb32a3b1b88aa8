"""Robust estimation of a Poisson intensity through the median of jittered counts.

The median of ``N + U`` (``N ~ Poisson(lam)``, ``U ~ U(0, 1)``) is close to
``lam + 1/3``, so ``median(counts + U) - 1/3`` estimates ``lam``.
"""

from .estimators import (
    CountSample,
    Estimate,
    JitteredSample,
    Method,
    TukeyConfig,
    estimate,
    histogram_median,
    lambda_jittered,
    lambda_median_raw,
    lambda_mle,
    sample_median,
    sigma_hat,
    sigma_stirling,
    tukey_estimate,
)
from .jitter_theory import MedianSolution, h_function, theoretical_median
from .poisson_core import Intensity, cdf, jittered_cdf, jittered_density, pmf

__version__ = "0.1.0"

__all__ = [
    "CountSample",
    "Estimate",
    "Intensity",
    "JitteredSample",
    "MedianSolution",
    "Method",
    "TukeyConfig",
    "cdf",
    "estimate",
    "h_function",
    "histogram_median",
    "jittered_cdf",
    "jittered_density",
    "lambda_jittered",
    "lambda_median_raw",
    "lambda_mle",
    "pmf",
    "sample_median",
    "sigma_hat",
    "sigma_stirling",
    "theoretical_median",
    "tukey_estimate",
]
