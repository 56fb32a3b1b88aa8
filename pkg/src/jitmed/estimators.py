"""Estimators of a Poisson intensity from a sample of counts.

Four estimators are provided:

* ``lambda_jittered`` -- sample median of ``counts + U(0, 1)`` minus 1/3,
* ``lambda_mle`` -- the sample mean,
* ``lambda_median_raw`` -- the sample median of the raw counts,
* ``tukey_estimate`` -- a redescending M-estimator with a bias correction
  ``a(lam, k)`` recalibrated at every fixed-point step.

``sample_median`` is the lower median ``inf{x : F_n(x) >= 1/2}``, i.e. the
``ceil(n/2)``-th order statistic. The jittered estimator averages the two
central order statistics for even ``n`` instead (the usual ``median`` of R and
numpy): the lower median carries a downward bias of about
``1 / (2 (n+1) f)``, which is of the same order as the standard error over
``sqrt(n)`` and visibly shifts the standardized error.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .poisson_core import pmf
from .rng import jitter_at, jitter_uniforms

__all__ = [
    "Method",
    "CountSample",
    "JitteredSample",
    "Estimate",
    "TukeyConfig",
    "CalibrationError",
    "ConvergenceError",
    "NonEstimableError",
    "FAST_PATH_MIN_N",
    "sample_median",
    "jitter",
    "jittered_values",
    "histogram_median",
    "lambda_jittered",
    "lambda_mle",
    "lambda_median_raw",
    "sigma_hat",
    "sigma_stirling",
    "delta_lambda_stat",
    "tukey_psi",
    "tukey_expectation",
    "tukey_a",
    "tukey_estimate",
    "estimate",
]

#: sample size from which ``lambda_jittered`` switches to ``histogram_median``
FAST_PATH_MIN_N = 4096

_CHUNK = 1 << 20


class Method(enum.Enum):
    JITTERED = "jittered"
    MLE = "mle"
    MEDIAN_RAW = "median"
    TUKEY = "tukey"


class CalibrationError(ArithmeticError):
    """No root of ``E psi_{k,a}(Y, lam) = 0`` in ``a`` was bracketed."""


class ConvergenceError(ArithmeticError):
    """The Tukey fixed-point iteration did not settle."""

    def __init__(self, message, last=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class NonEstimableError(ArithmeticError):
    """The density at the estimated median underflowed."""


@dataclass(frozen=True, eq=False)
class CountSample:
    """A nonempty sample of nonnegative integer counts (stored as int64)."""

    counts: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.counts)
        if raw.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if raw.size == 0:
            raise ValueError("sample is empty")
        if raw.dtype.kind in "iu":
            arr = raw.astype(np.int64, copy=False)
        elif raw.dtype.kind in "fb":
            arr = raw.astype(np.int64)
            if not np.array_equal(arr, raw):
                raise ValueError("counts must be integers")
        else:
            raise ValueError(f"unsupported count dtype {raw.dtype}")
        if arr.min() < 0:
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", arr)

    def __len__(self):
        return self.counts.size

    @property
    def n(self) -> int:
        return self.counts.size


@dataclass(frozen=True, eq=False)
class JitteredSample:
    counts: np.ndarray
    jitters: np.ndarray
    jitter_seed: int

    @property
    def values(self) -> np.ndarray:
        return self.counts + self.jitters


@dataclass(frozen=True)
class Estimate:
    """Point estimate with an optional normal-approximation 95% interval.

    ``ci95`` is filled in from ``std_error`` when not given.
    """

    value: float
    method: Method
    std_error: float | None = None
    ci95: tuple[float, float] | None = None
    iterations: int | None = None
    n: int | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.std_error is not None:
            if not self.std_error >= 0:
                raise ValueError("std_error must be nonnegative")
            if self.ci95 is None:
                half = 1.96 * self.std_error
                object.__setattr__(self, "ci95", (self.value - half, self.value + half))


@dataclass(frozen=True)
class TukeyConfig:
    """Tuning of the Tukey M-estimator.

    ``a_solver_tol`` bounds the calibration residual ``|E psi_{k,a}|``;
    ``fixed_point_tol`` bounds the change between successive estimates.
    """

    k: float = 6.0
    fixed_point_tol: float = 1e-4
    max_outer_iter: int = 100
    a_solver_tol: float = 1e-10
    expectation_tail_eps: float = 1e-16

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        for name in ("fixed_point_tol", "a_solver_tol", "expectation_tail_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_outer_iter < 1:
            raise ValueError("max_outer_iter must be at least 1")


def _as_sample(sample) -> CountSample:
    return sample if isinstance(sample, CountSample) else CountSample(sample)


def _check_kind(kind):
    if kind not in ("lower", "midpoint"):
        raise ValueError(f"median kind must be 'lower' or 'midpoint', got {kind!r}")


def sample_median(values, kind="lower"):
    """Sample median by selection on a private copy.

    ``kind="lower"`` returns ``inf{x : F_n(x) >= 1/2}``, the ``ceil(n/2)``-th
    order statistic. ``kind="midpoint"`` averages the two central order
    statistics when ``n`` is even. Selection uses ``np.partition``
    (introselect, expected linear time).
    """
    _check_kind(kind)
    arr = np.array(values, copy=True).ravel()
    n = arr.size
    if n == 0:
        raise ValueError("median of an empty sample")
    kth = (n + 1) // 2 - 1
    if kind == "midpoint" and n % 2 == 0:
        arr.partition([kth, kth + 1])
        return 0.5 * (arr[kth] + arr[kth + 1]).item()
    arr.partition(kth)
    return arr[kth].item()


def jittered_values(counts: np.ndarray, seed) -> np.ndarray:
    """``counts + jitters`` as float64, with jitters regenerated from ``seed``."""
    z = jitter_uniforms(seed, counts.size)
    z += counts
    return z


def jitter(sample, seed) -> JitteredSample:
    """Attach Uniform(0, 1) jitters that are a pure function of ``(seed, index)``."""
    sample = _as_sample(sample)
    return JitteredSample(
        counts=sample.counts,
        jitters=jitter_uniforms(seed, sample.n),
        jitter_seed=int(seed),
    )


def _bin_order_stats(counts: np.ndarray, seed, m: int, size: int, js: list) -> list:
    """The ``js``-th smallest (0-based) of ``m + jitter`` over entries with count ``m``."""
    in_bin = np.empty(size, dtype=np.float64)
    filled = 0
    for start in range(0, counts.size, _CHUNK):
        idx = np.flatnonzero(counts[start : start + _CHUNK] == m)
        if idx.size:
            idx += start
            in_bin[filled : filled + idx.size] = jitter_at(seed, idx)
            filled += idx.size
    in_bin.partition(js)
    return [np.float64(m) + in_bin[j] for j in js]


def _histogram_fits(counts: np.ndarray) -> bool:
    # keep the count histogram no larger than the sample itself
    return int(counts.max()) <= counts.size + 1024


def histogram_median(sample, seed, kind="lower") -> float:
    """Median of ``counts + jitters`` without materializing the jitters.

    The count histogram locates the bin holding each required order
    statistic; only the jitters of that bin are regenerated and searched.
    Bit-identical to ``sample_median(jittered_values(counts, seed), kind)``.
    """
    _check_kind(kind)
    counts = _as_sample(sample).counts
    n = counts.size
    hist = np.bincount(counts)
    cum = np.cumsum(hist)
    ranks = [(n + 1) // 2]
    if kind == "midpoint" and n % 2 == 0:
        ranks.append(ranks[0] + 1)
    by_bin = {}
    for rank in ranks:
        m = int(np.searchsorted(cum, rank))
        below = int(cum[m - 1]) if m > 0 else 0
        by_bin.setdefault(m, []).append(rank - below - 1)
    stats = []
    for m, js in by_bin.items():
        stats.extend(_bin_order_stats(counts, seed, m, int(hist[m]), js))
    if len(stats) == 2:
        return float(0.5 * (stats[0] + stats[1]))
    return float(stats[0])


def sigma_hat(lambda_hat) -> float:
    """Plug-in ``sigma = 1 / (2 P(N_lhat = floor(lhat + 1/3)))``."""
    lh = float(lambda_hat)
    if not lh > -1.0 / 3.0:
        raise ValueError(f"lambda_hat must exceed -1/3, got {lh!r}")
    k = math.floor(lh + 1.0 / 3.0)
    if lh > 0:
        p = pmf(lh, k)
    else:
        # k == 0 here; the pmf formula reduces to exp(-lambda)
        p = math.exp(-lh)
    if p == 0.0:
        raise NonEstimableError(f"P(N = {k}) underflows at lambda_hat={lh!r}")
    return 1.0 / (2.0 * p)


def sigma_stirling(lambda_hat) -> float:
    """Large-intensity approximation ``sqrt(pi * lambda / 2)``."""
    lh = float(lambda_hat)
    if not lh > 0:
        raise ValueError("lambda_hat must be positive")
    return math.sqrt(math.pi * lh / 2.0)


def lambda_jittered(sample, seed=0, jitters=None, kind="midpoint") -> Estimate:
    """Median of the jittered counts minus 1/3.

    ``jitters`` overrides the generated jitters (values must lie in (0, 1)).
    ``kind`` selects the even-``n`` median convention, see ``sample_median``.
    """
    sample = _as_sample(sample)
    n = sample.n
    if jitters is not None:
        jit = np.asarray(jitters, dtype=np.float64)
        if jit.shape != sample.counts.shape:
            raise ValueError("jitters must match the sample length")
        if np.any((jit <= 0.0) | (jit >= 1.0)):
            raise ValueError("jitters must lie strictly inside (0, 1)")
        med = sample_median(sample.counts + jit, kind)
    elif n >= FAST_PATH_MIN_N and _histogram_fits(sample.counts):
        med = histogram_median(sample, seed, kind)
    else:
        med = sample_median(jittered_values(sample.counts, seed), kind)
    value = med - 1.0 / 3.0
    try:
        se = sigma_hat(value) / math.sqrt(n)
    except NonEstimableError:
        se = None
    return Estimate(value=value, method=Method.JITTERED, std_error=se, n=n, seed=int(seed))


def lambda_mle(sample) -> Estimate:
    sample = _as_sample(sample)
    # exact integer sum; np.mean would route int64 through a slower float reduction
    value = int(sample.counts.sum()) / sample.n
    return Estimate(
        value=value, method=Method.MLE, std_error=math.sqrt(value / sample.n), n=sample.n
    )


def lambda_median_raw(sample) -> Estimate:
    sample = _as_sample(sample)
    return Estimate(value=float(sample_median(sample.counts)), method=Method.MEDIAN_RAW, n=sample.n)


def delta_lambda_stat(lambda_true, estimate: Estimate, n) -> float:
    """Standardized error ``2 sqrt(n) (lhat - lam) P(N_lhat = floor(lhat + 1/3))``."""
    if estimate.method is not Method.JITTERED:
        raise ValueError("the standardized statistic is defined for the jittered estimator")
    lh = estimate.value
    return math.sqrt(n) * (lh - float(lambda_true)) / sigma_hat(lh)


def tukey_psi(y, lam, a, k):
    """``psi_{k,a}(y, lam)``.

    The indicator tests the shifted residual ``(y - lam)/sqrt(lam) - a`` while
    the squared factor uses the unshifted one.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValueError("lam must be positive")
    r = (np.asarray(y, dtype=float) - lam) / math.sqrt(lam)
    s = r - a
    out = s * (k * k - r * r) ** 2 * (np.abs(s) <= k)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _support(lam: float, eps: float) -> np.ndarray:
    s = math.sqrt(lam)
    lo = max(0, math.floor(lam - 12.0 * s - 20.0))
    hi = math.ceil(lam + 12.0 * s + 20.0)
    logl = math.log(lam)

    def logp(y):
        return y * logl - lam - gammaln(y + 1.0)

    log_eps = math.log(eps)
    while lo > 0 and logp(lo) >= log_eps:
        lo = max(0, lo - math.ceil(s) - 1)
    while logp(hi) >= log_eps:
        hi += math.ceil(s) + 1
    return np.arange(lo, hi + 1, dtype=np.float64)


class _Calibration:
    """``g(a) = E psi_{k,a}(Y, lam)`` over a truncated Poisson support."""

    def __init__(self, lam, k, eps):
        self.lam = float(lam)
        self.k = float(k)
        y = _support(self.lam, eps)
        p = np.exp(y * math.log(self.lam) - self.lam - gammaln(y + 1.0))
        self.r = (y - self.lam) / math.sqrt(self.lam)
        self.w = p * (self.k * self.k - self.r * self.r) ** 2

    def __call__(self, a: float) -> float:
        # r is sorted, so the indicator keeps a contiguous slice
        lo = np.searchsorted(self.r, a - self.k, side="left")
        hi = np.searchsorted(self.r, a + self.k, side="right")
        r, w = self.r[lo:hi], self.w[lo:hi]
        return float(np.dot(w, r) - a * w.sum())


def tukey_expectation(lam, a, k, eps: float = 1e-16) -> float:
    """``E psi_{k,a}(Y, lam)`` for ``Y ~ Poisson(lam)``, tails below ``eps`` dropped."""
    return _Calibration(lam, k, eps)(float(a))


def tukey_a(lam, k=6.0, cfg: TukeyConfig | None = None) -> float:
    """Correction ``a(lam, k)`` solving ``E psi_{k,a}(Y, lam) = 0``.

    Sign changes are located on a grid over ``[-k, k]``; the one nearest
    ``a = 0`` is refined by bisection until ``|g(a)| <= cfg.a_solver_tol`` or
    the bracket can no longer shrink.
    """
    cfg = cfg or TukeyConfig(k=k)
    lam = float(lam)
    if not lam > 0:
        raise ValueError("lam must be positive")
    g = _Calibration(lam, k, cfg.expectation_tail_eps)
    grid = np.linspace(-k, k, 97)
    vals = np.array([g(a) for a in grid])
    exact = np.flatnonzero(vals == 0.0)
    if exact.size:
        return float(grid[exact[np.argmin(np.abs(grid[exact]))]])
    flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    if flips.size == 0:
        raise CalibrationError(f"no sign change of E psi in a over [-{k}, {k}] at lam={lam}")
    i = flips[np.argmin(np.abs(grid[flips] + grid[flips + 1]))]
    lo, hi = float(grid[i]), float(grid[i + 1])
    glo, ghi = float(vals[i]), float(vals[i + 1])
    best_a, best_g = (lo, glo) if abs(glo) <= abs(ghi) else (hi, ghi)
    while abs(best_g) > cfg.a_solver_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if abs(gm) < abs(best_g):
            best_a, best_g = mid, gm
        if gm == 0.0:
            break
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return best_a


class _MEquation:
    """``sum_i psi_{k,a}(y_i, lam)`` as a function of ``lam``, grouped by distinct count."""

    def __init__(self, counts: np.ndarray, a: float, k: float):
        hist = np.bincount(counts)
        vals = np.flatnonzero(hist)
        self.y = vals.astype(np.float64)
        self.mult = hist[vals].astype(np.float64)
        self.a = a
        self.k = k

    def __call__(self, lam: float) -> float:
        r = (self.y - lam) / math.sqrt(lam)
        s = r - self.a
        keep = np.abs(s) <= self.k
        return float(np.dot(self.mult[keep], s[keep] * (self.k * self.k - r[keep] ** 2) ** 2))


def _solve_m_equation(eq: _MEquation, lam0: float, lam_floor: float) -> float:
    f0 = eq(lam0)
    if f0 == 0.0:
        return lam0
    d = max(1e-3, 0.05 * math.sqrt(lam0))
    lo = hi = None
    for _ in range(60):
        up = lam0 + d
        f_up = eq(up)
        if f_up != 0.0 and (f_up > 0) != (f0 > 0):
            lo, hi, flo = lam0, up, f0
            break
        down = max(lam0 - d, lam_floor)
        if down < lam0:
            f_down = eq(down)
            if f_down != 0.0 and (f_down > 0) != (f0 > 0):
                lo, hi, flo = down, lam0, f_down
                break
        d *= 2.0
    if lo is None:
        raise ConvergenceError(f"no sign change of the M-equation around lam={lam0}", last=lam0)
    tol = 1e-12 * max(1.0, lam0)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = eq(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tukey_estimate(sample, cfg: TukeyConfig | None = None, init=None, seed=0) -> Estimate:
    """Tukey's modified M-estimator by alternating calibration and M-step.

    Starting from ``init`` (default: the jittered estimate under ``seed``),
    each step recomputes ``a(lam, k)`` and then solves
    ``sum_i psi_{k,a}(y_i, lam) = 0`` for ``lam`` by bracketing bisection.
    Stops once successive estimates differ by at most ``cfg.fixed_point_tol``.
    """
    cfg = cfg or TukeyConfig()
    sample = _as_sample(sample)
    counts = sample.counts
    if counts.max() == 0:
        raise ValueError("Tukey estimate undefined for an all-zero sample")
    if init is None:
        lam = lambda_jittered(sample, seed).value
    else:
        lam = float(init)
    floor = 1e-8
    if not lam > floor:
        lam = float(np.mean(counts))
    for it in range(1, cfg.max_outer_iter + 1):
        a = tukey_a(lam, cfg.k, cfg)
        lam_next = _solve_m_equation(_MEquation(counts, a, cfg.k), lam, floor)
        if abs(lam_next - lam) <= cfg.fixed_point_tol:
            return Estimate(
                value=lam_next, method=Method.TUKEY, iterations=it, n=sample.n, extra={"a": a}
            )
        lam = lam_next
    raise ConvergenceError(
        f"no convergence after {cfg.max_outer_iter} iterations", last=lam, iterations=cfg.max_outer_iter
    )


def estimate(sample, method, seed=0, tukey: TukeyConfig | None = None) -> Estimate:
    """Dispatch to one of the four estimators by ``Method`` or its string value."""
    method = Method(method) if not isinstance(method, Method) else method
    if method is Method.JITTERED:
        return lambda_jittered(sample, seed)
    if method is Method.MLE:
        return lambda_mle(sample)
    if method is Method.MEDIAN_RAW:
        return lambda_median_raw(sample)
    return tukey_estimate(sample, tukey, seed=seed)
