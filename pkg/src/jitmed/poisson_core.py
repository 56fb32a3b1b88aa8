"""Poisson probability kernels and the distribution of a jittered count.

A jittered count is ``Z = N + U`` with ``N ~ Poisson(lam)`` and ``U ~ U(0, 1)``
independent. ``Z`` has a piecewise constant density, equal to the Poisson pmf
of ``floor(t)``, and a piecewise linear cdf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, pdtr

__all__ = [
    "Intensity",
    "log_pmf",
    "pmf",
    "cdf",
    "integer_median",
    "jittered_density",
    "jittered_cdf",
]

# exp() underflows to a subnormal/zero below this
_LOG_UNDERFLOW = -745.0


@dataclass(frozen=True)
class Intensity:
    """A validated Poisson rate: positive and finite."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError(f"Poisson intensity must be positive and finite, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self):
        return self.value


def _lam(lam) -> float:
    if isinstance(lam, Intensity):
        return lam.value
    return Intensity(lam).value


def _check_count(k) -> int:
    if isinstance(k, (bool, np.bool_)) or int(k) != k or k < 0:
        raise ValueError(f"count must be a nonnegative integer, got {k!r}")
    return int(k)


def log_pmf(lam, k) -> float:
    """Natural log of ``P(N_lam = k)``, evaluated as ``k log(lam) - lam - lgamma(k+1)``."""
    lam = _lam(lam)
    k = _check_count(k)
    if k == 0:
        return -lam
    return k * math.log(lam) - lam - float(gammaln(k + 1.0))


def pmf(lam, k) -> float:
    """Poisson probability mass ``P(N_lam = k)``.

    Returns exactly 0.0 when the log-probability is below -745.
    """
    lp = log_pmf(lam, k)
    if lp < _LOG_UNDERFLOW:
        return 0.0
    return math.exp(lp)


def cdf(lam, k) -> float:
    """``P(N_lam <= k)`` via the regularized upper incomplete gamma function.

    Uses ``P(N_lam <= k) = Q(k + 1, lam)``, which stays accurate for large
    ``lam`` where summing the pmf would not.
    """
    lam = _lam(lam)
    k = _check_count(k)
    return float(pdtr(k, lam))


def _cdf_or_zero(lam: float, k: int) -> float:
    return 0.0 if k < 0 else float(pdtr(k, lam))


def integer_median(lam) -> int:
    """Smallest integer ``m`` with ``P(N_lam <= m) >= 1/2``."""
    lam = _lam(lam)
    # the median lies in [lam - log 2, lam + 1/3]
    m = max(0, math.floor(lam - math.log(2.0)) - 1)
    while float(pdtr(m, lam)) < 0.5:
        m += 1
    while m > 0 and float(pdtr(m - 1, lam)) >= 0.5:
        m -= 1
    return m


def _check_t(t) -> float:
    t = float(t)
    if not t >= 0.0:
        raise ValueError(f"jittered support is [0, inf), got t={t!r}")
    return t


def jittered_density(lam, t) -> float:
    """Density of ``N_lam + U`` at ``t``: ``P(N_lam = floor(t))``."""
    t = _check_t(t)
    if math.isinf(t):
        return 0.0
    return pmf(lam, math.floor(t))


def jittered_cdf(lam, t) -> float:
    """``P(N_lam + U <= t)``.

    On the bin ``[m, m+1)`` this is ``P(N <= m-1) + (t - m) P(N = m)``.
    """
    lam = _lam(lam)
    t = _check_t(t)
    if math.isinf(t):
        return 1.0
    m = math.floor(t)
    return _cdf_or_zero(lam, m - 1) + (t - m) * pmf(lam, m)
