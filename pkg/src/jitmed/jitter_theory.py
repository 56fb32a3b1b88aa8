"""Exact median of a jittered Poisson count and its large-intensity correction.

The median of ``Z = N_lam + U`` sits at ``lam + 1/3 + H(frac(lam)) / lam``
up to ``o(1/lam)``, where ``H`` is a piecewise cubic in the fractional part of
``lam``. This module computes the exact median and exposes the sequences

    w_n(x, k)     = P(Z_{n+x} <= n + x + 1/3 + k / (n + x))
    Delta_n(x, k) = (n+1)! / g_{n+1}(n+1+x) * (w_{n+1} - w_n),   g_m(u) = e^{-u} u^m

whose monotonicity in ``n`` pins the correction down, so the asymptotics can
be checked numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import pdtr

from .poisson_core import _cdf_or_zero, _lam, cdf, jittered_cdf, pmf

__all__ = [
    "H_INF",
    "H_SUP",
    "Branch",
    "MedianSolution",
    "SequencePoint",
    "h_function",
    "theoretical_median",
    "branch_of",
    "w_value",
    "w_sequence",
    "c_n",
    "delta_sequence",
    "expansion_residual",
    "monotone_onset",
]

H_INF = -8.0 / 405.0
H_SUP = 4.0 / 135.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def h_function(x):
    """Correction ``H(x)`` on ``[0, 1]``; accepts scalars or arrays.

    ``x^2 (x - 1) / 3 + 4/135`` on ``[0, 2/3]`` and
    ``x (x^2 - 4x + 5) / 3 - 86/135`` on ``[2/3, 1]``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise ValueError("H is defined on [0, 1]")
    low = arr * arr * (arr - 1.0) / 3.0 + 4.0 / 135.0
    high = arr * (arr * arr - 4.0 * arr + 5.0) / 3.0 - 86.0 / 135.0
    out = np.where(arr <= 2.0 / 3.0, low, high)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MedianSolution:
    """Median of ``N_lam + U`` with diagnostics.

    ``delta`` is ``median - lam - 1/3``; ``h_at_frac`` is ``H(lam - floor(lam))``
    so that ``lam * delta`` can be compared with it directly.
    """

    lam: float
    median: float
    delta: float
    h_at_frac: float
    bracket_width: float
    evaluations: int


def _median_bin(lam: float) -> tuple[int, int]:
    # smallest m with P(N <= m) > 1/2; the median of Z lies in [m, m+1)
    m = max(0, math.floor(lam - math.log(2.0)) - 1)
    evals = 0
    while True:
        evals += 1
        if float(pdtr(m, lam)) > 0.5:
            break
        m += 1
    while m > 0:
        evals += 1
        if float(pdtr(m - 1, lam)) > 0.5:
            m -= 1
        else:
            break
    return m, evals


def theoretical_median(lam) -> MedianSolution:
    """Solve ``P(N_lam + U <= t) = 1/2`` exactly.

    The cdf is linear on the bin ``[m, m+1)`` holding the median, so once the
    bin is found the root is ``m + (1/2 - P(N <= m-1)) / P(N = m)``. Bisection
    is used only if that pmf underflows.
    """
    lam = _lam(lam)
    m, evals = _median_bin(lam)
    below = _cdf_or_zero(lam, m - 1)
    p = pmf(lam, m)
    width = 0.0
    if p > 0.0:
        t = m + (0.5 - below) / p
        t = min(max(t, float(m)), float(m + 1))
    else:
        lo, hi = float(m), float(m + 1)
        while True:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            evals += 1
            if jittered_cdf(lam, mid) < 0.5:
                lo = mid
            else:
                hi = mid
        t = hi
        width = hi - lo
    frac = lam - math.floor(lam)
    return MedianSolution(
        lam=lam,
        median=t,
        delta=t - lam - 1.0 / 3.0,
        h_at_frac=h_function(frac),
        bracket_width=width,
        evaluations=evals,
    )


class Branch(enum.Enum):
    """Which closed form of ``w_n`` applies: ``LOW`` uses ``P(N = n)``, ``HIGH`` ``P(N = n+1)``."""

    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class SequencePoint:
    n: int
    x: float
    k: float
    w: float
    delta_n: float
    branch: Branch


def _check_nx(n, x):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x!r}")
    return int(n), float(x)


def branch_of(n, x, k) -> Branch:
    """Branch for ``s = x + k/(n+x)``: ``LOW`` on ``[-1/3, 2/3)``, ``HIGH`` on ``[2/3, 5/3)``.

    An exact tie ``s == 2/3`` goes to ``HIGH`` when ``k >= 0`` and ``LOW`` otherwise.
    """
    n, x = _check_nx(n, x)
    s = x + k / (n + x)
    if s == 2.0 / 3.0:
        return Branch.HIGH if k >= 0 else Branch.LOW
    if -1.0 / 3.0 <= s < 2.0 / 3.0:
        return Branch.LOW
    if 2.0 / 3.0 <= s < 5.0 / 3.0:
        return Branch.HIGH
    raise ValueError(f"x + k/(n+x) = {s!r} is outside [-1/3, 5/3)")


def w_value(n, x, k) -> float:
    """``w_n(x, k)`` from its closed form."""
    branch = branch_of(n, x, k)
    n, x = int(n), float(x)
    lam = n + x
    coef = x - 2.0 / 3.0 + k / lam
    p = pmf(lam, n) if branch is Branch.LOW else pmf(lam, n + 1)
    return cdf(lam, n) + coef * p


def _log1p_minus_plus(u):
    """``log1p(-u) + u`` without cancellation for small ``u``."""
    u = np.asarray(u, dtype=float)
    direct = np.log1p(-u) + u
    # Horner on -sum_{j>=2} u^j / j; 24 terms is exact to double precision for u < 0.05
    acc = np.zeros_like(u)
    for j in range(25, 1, -1):
        acc = acc * u + 1.0 / j
    series = -(u * u) * acc
    return np.where(u < 0.05, series, direct)


def _c_minus_one(n: int, v, x: float):
    v = np.asarray(v, dtype=float)
    u = (1.0 - v) / (n + 1.0 + x)
    y = (1.0 - v) * x / (n + 1.0 + x) + (n + 1.0) * _log1p_minus_plus(u)
    return np.expm1(y)


def c_n(n, v, x):
    """Kernel ``((n + v + x) / (n + 1 + x))^(n+1) * exp(1 - v)``.

    ``v`` may be an array; ``c_n(n, 1, x) == 1`` exactly.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    out = 1.0 + _c_minus_one(int(n), v, float(x))
    if np.ndim(out) == 0:
        return float(out)
    return out


def delta_sequence(n, x, k) -> float:
    """``Delta_n(x, k)`` from the closed forms in ``c_n(0, x)`` and ``int_0^1 c_n(v, x) dv``.

    Every ``c_n`` enters as ``c_n - 1`` so the O(1/n) terms cancel without
    losing the O(1/n^2) remainder.
    """
    b0 = branch_of(n, x, k)
    b1 = branch_of(n + 1, x, k)
    if b0 is not b1:
        raise ValueError(f"branch changes between n={n} and n+1 ({b0.name} -> {b1.name})")
    n, x = int(n), float(x)
    k = float(k)
    c0 = float(_c_minus_one(n, 0.0, x))
    ic = float(np.dot(_GL_WEIGHTS, _c_minus_one(n, _GL_NODES, x)))
    r_n = k / (n + x)
    r_n1 = k / (n + 1.0 + x)
    shift = x - 2.0 / 3.0
    if b0 is Branch.LOW:
        ratio = (n + 1.0) / (n + x)
        # 1 - c0 (n+1)/(n+x), with c0 stored as c0 - 1
        one_minus = -c0 - (1.0 - x) / (n + x) * (1.0 + c0)
        terms = [c0, -ic, shift * one_minus, r_n1, -ratio * r_n, -ratio * c0 * r_n]
    else:
        q_minus_one = (x - 1.0) / (n + 2.0)
        q = 1.0 + q_minus_one
        terms = [c0, -ic, shift * (q_minus_one - c0), q * r_n1, -r_n, -c0 * r_n]
    return math.fsum(terms)


def expansion_residual(n, x, k) -> float:
    """``Delta_n * 2 (n+1+x)^2 / 3 - (H(x) - k)``; tends to 0 as ``n`` grows."""
    d = delta_sequence(n, x, k)
    return d * 2.0 * (n + 1.0 + x) ** 2 / 3.0 - (h_function(x) - k)


def w_sequence(n, x, k) -> SequencePoint:
    """``w_n(x, k)`` with its branch and ``Delta_n`` (NaN when ``n+1`` switches branch)."""
    w = w_value(n, x, k)
    branch = branch_of(n, x, k)
    try:
        d = delta_sequence(n, x, k)
    except ValueError:
        d = math.nan
    return SequencePoint(n=int(n), x=float(x), k=float(k), w=w, delta_n=d, branch=branch)


def monotone_onset(x, k, n_max: int = 10_000, n_min: int = 1) -> tuple[int, int]:
    """Smallest ``n0`` such that ``w_n(x, k)`` is monotone on ``[n0, n_max]``.

    Returns ``(n0, sign)`` where ``sign`` is +1 for increasing, -1 for
    decreasing and 0 if ``Delta_n`` vanishes at ``n_max``. Uses the sign of
    ``Delta_n``, which matches that of ``w_{n+1} - w_n``.
    """
    signs = []
    ns = range(n_min, n_max)
    for n in ns:
        try:
            signs.append(np.sign(delta_sequence(n, x, k)))
        except ValueError:
            signs.append(np.nan)
    signs = np.asarray(signs)
    final = signs[-1]
    n0 = n_max - 1
    for i in range(len(signs) - 1, -1, -1):
        if signs[i] != final:
            break
        n0 = n_min + i
    return n0, int(final)
