"""Monte Carlo comparison of the estimators and a timing benchmark.

Every replication draws from its own counter-based stream keyed by
``(master_seed, lambda index, rep, purpose)``, so results do not depend on the
order or the number of workers used to run replications. The same sample is
fed to every estimator within a replication.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.special import gammaln, pdtr

from . import estimators as est
from .estimators import CountSample, Method, TukeyConfig
from .rng import Purpose, derive_seed, stream

__all__ = [
    "INVERSION_MAX_LAMBDA",
    "poisson_variates",
    "poisson_sampler",
    "solve_h_from_snr",
    "snr_db",
    "ContaminationConfig",
    "contaminate",
    "MonteCarloConfig",
    "GridRow",
    "GridReport",
    "normality_summary",
    "run_grid",
    "BenchRow",
    "BenchTable",
    "estimate_footprint",
    "bench",
]

INVERSION_MAX_LAMBDA = 30.0
_DRAW_CHUNK = 1 << 22


def _inversion(lam: float, size: int, rng: np.random.Generator) -> np.ndarray:
    top = math.ceil(lam + 12.0 * math.sqrt(lam) + 30.0)
    table = pdtr(np.arange(top + 1), lam)
    u = rng.random(size)
    # smallest k with F(k) > u
    out = np.searchsorted(table, u, side="right")
    np.minimum(out, top, out=out)
    return out.astype(np.int64)


def _ptrs(lam: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # Hormann's transformed rejection with squeeze, vectorized over pending draws
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    out = np.empty(size, dtype=np.int64)
    pending = np.arange(size)
    while pending.size:
        m = pending.size
        U = rng.random(m) - 0.5
        V = rng.random(m)
        us = 0.5 - np.abs(U)
        k = np.floor((2.0 * a / us + b) * U + lam + 0.43)
        accept = (us >= 0.07) & (V <= vr)
        reject = (k < 0) | ((us < 0.013) & (V > us))
        test = ~accept & ~reject
        if test.any():
            kt = k[test]
            lhs = np.log(V[test] * invalpha / (a / (us[test] * us[test]) + b))
            rhs = -lam + kt * loglam - gammaln(kt + 1.0)
            accept[test] = lhs <= rhs
        out[pending[accept]] = k[accept].astype(np.int64)
        pending = pending[~accept]
    return out


def poisson_variates(lam, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` exact Poisson(lam) draws as int64.

    Table inversion for ``lam <= 30``, PTRS rejection above. Large requests
    are generated in chunks to bound temporary memory.
    """
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError("lam must be positive and finite")
    draw = _inversion if lam <= INVERSION_MAX_LAMBDA else _ptrs
    if size <= _DRAW_CHUNK:
        return draw(lam, size, rng)
    out = np.empty(size, dtype=np.int64)
    for start in range(0, size, _DRAW_CHUNK):
        stop = min(size, start + _DRAW_CHUNK)
        out[start:stop] = draw(lam, stop - start, rng)
    return out


def poisson_sampler(lam, rng: np.random.Generator) -> int:
    """A single Poisson(lam) draw."""
    return int(poisson_variates(lam, 1, rng)[0])


def snr_db(lam, pi, sqrt_h) -> float:
    """``10 log10(lam / (h pi (1 - pi)))`` with ``h = sqrt_h**2``."""
    return 10.0 * math.log10(lam / (sqrt_h * sqrt_h * pi * (1.0 - pi)))


def solve_h_from_snr(lam, pi, snr_target_db) -> int:
    """Integer ``sqrt(h)`` whose SNR is closest to the target; ties go to the smaller.

    Returns 0 when ``pi == 0`` (no outliers).
    """
    lam, pi = float(lam), float(pi)
    if pi == 0.0:
        return 0
    if not 0.0 < pi < 1.0:
        raise ValueError("pi must lie in [0, 1)")
    if not lam > 0:
        raise ValueError("lam must be positive")
    s_star = math.sqrt(lam / (pi * (1.0 - pi) * 10.0 ** (snr_target_db / 10.0)))
    candidates = range(max(1, math.floor(s_star) - 1), math.ceil(s_star) + 2)
    return min(candidates, key=lambda s: (abs(snr_db(lam, pi, s) - snr_target_db), s))


@dataclass(frozen=True)
class ContaminationConfig:
    """Additive outliers: each count gains ``sqrt_h`` with probability ``pi``.

    When ``snr_target_db`` is set, ``sqrt_h`` is derived per intensity with
    ``solve_h_from_snr``.
    """

    pi: float
    sqrt_h: int = 0
    snr_target_db: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.pi < 1.0:
            raise ValueError("pi must lie in [0, 1)")
        if int(self.sqrt_h) != self.sqrt_h or self.sqrt_h < 0:
            raise ValueError("sqrt_h must be a nonnegative integer")
        if self.pi == 0.0 and self.sqrt_h != 0:
            raise ValueError("sqrt_h must be 0 when pi is 0")

    def resolved(self, lam) -> ContaminationConfig:
        if self.snr_target_db is None:
            return self
        return replace(self, sqrt_h=solve_h_from_snr(lam, self.pi, self.snr_target_db), snr_target_db=None)


def contaminate(sample, cfg: ContaminationConfig, rng: np.random.Generator | None = None, outliers=None) -> CountSample:
    """Apply the additive-outlier model.

    ``outliers`` (boolean mask) fixes which entries are shifted; otherwise each
    entry is an outlier independently with probability ``cfg.pi``.
    """
    sample = est._as_sample(sample)
    if cfg.snr_target_db is not None:
        raise ValueError("resolve sqrt_h first (ContaminationConfig.resolved)")
    if cfg.pi == 0.0 and outliers is None:
        return sample
    if outliers is None:
        if rng is None:
            raise ValueError("an rng is required to draw outliers")
        outliers = rng.random(sample.n) < cfg.pi
    mask = np.asarray(outliers, dtype=bool)
    if mask.shape != sample.counts.shape:
        raise ValueError("outlier mask must match the sample length")
    return CountSample(sample.counts + int(cfg.sqrt_h) * mask)


@dataclass(frozen=True)
class MonteCarloConfig:
    lambdas: tuple
    n: int
    reps: int
    master_seed: int = 0
    estimators: tuple = (Method.JITTERED, Method.MLE)
    contamination: ContaminationConfig | None = None
    tukey: TukeyConfig = field(default_factory=TukeyConfig)
    threads: int = 1

    def __post_init__(self):
        lambdas = tuple(float(v) for v in np.atleast_1d(self.lambdas))
        if not lambdas:
            raise ValueError("lambdas must be nonempty")
        if any(not (v > 0 and math.isfinite(v)) for v in lambdas):
            raise ValueError("lambdas must be positive and finite")
        if self.n < 1 or self.reps < 1:
            raise ValueError("n and reps must be at least 1")
        methods = tuple(Method(m) for m in self.estimators)
        if not methods:
            raise ValueError("at least one estimator is required")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "estimators", methods)


@dataclass
class GridRow:
    lam: float
    estimator: Method
    bias: float
    rmse: float
    mean_estimate: float
    reps_used: int
    failures: int
    pi: float
    sqrt_h: int
    normality: dict | None
    wall_time_s: float


@dataclass
class GridReport:
    config: MonteCarloConfig
    rows: list

    def row(self, lam, estimator) -> GridRow:
        estimator = Method(estimator)
        for r in self.rows:
            if r.lam == float(lam) and r.estimator is estimator:
                return r
        raise KeyError((lam, estimator))

    def numeric_fields(self) -> list:
        """Everything except timings, for reproducibility checks."""
        out = []
        for r in self.rows:
            nm = r.normality or {}
            out.append(
                (r.lam, r.estimator.value, r.bias, r.rmse, r.mean_estimate, r.reps_used, r.failures,
                 r.sqrt_h, tuple(sorted(nm.items())))
            )
        return out


def normality_summary(values) -> dict:
    """Mean, sd and the fitted line of the normal probability plot."""
    v = np.asarray(values, dtype=float)
    (_, _), (slope, intercept, _) = stats.probplot(v, dist="norm")
    return {
        "mean": float(np.mean(v)),
        "sd": float(np.std(v, ddof=1)) if v.size > 1 else math.nan,
        "qq_slope": float(slope),
        "qq_intercept": float(intercept),
    }


def _one_rep(cfg: MonteCarloConfig, li: int, lam: float, cont, rep: int):
    counts = poisson_variates(lam, cfg.n, stream(cfg.master_seed, li, rep, Purpose.SAMPLE))
    sample = CountSample(counts)
    if cont is not None and cont.pi > 0:
        sample = contaminate(sample, cont, stream(cfg.master_seed, li, rep, Purpose.CONTAMINATION))
    jseed = derive_seed(cfg.master_seed, li, rep, Purpose.JITTER)
    values = {}
    times = {}
    delta = math.nan
    for m in cfg.estimators:
        t0 = time.perf_counter()
        try:
            e = est.estimate(sample, m, seed=jseed, tukey=cfg.tukey)
            values[m] = e.value
            if m is Method.JITTERED:
                delta = est.delta_lambda_stat(lam, e, cfg.n)
        except (ArithmeticError, ValueError):
            values[m] = math.nan
        times[m] = time.perf_counter() - t0
    return values, times, delta


def run_grid(cfg: MonteCarloConfig) -> GridReport:
    """Bias, RMSE and (for the jittered estimator) normality of the standardized error.

    Estimator failures are counted per row and excluded from the statistics.
    """
    rows = []
    for li, lam in enumerate(cfg.lambdas):
        cont = cfg.contamination.resolved(lam) if cfg.contamination is not None else None
        vals = {m: np.full(cfg.reps, np.nan) for m in cfg.estimators}
        secs = {m: np.zeros(cfg.reps) for m in cfg.estimators}
        deltas = np.full(cfg.reps, np.nan)

        def work(reps):
            for rep in reps:
                v, t, d = _one_rep(cfg, li, lam, cont, rep)
                for m in cfg.estimators:
                    vals[m][rep] = v[m]
                    secs[m][rep] = t[m]
                deltas[rep] = d

        if cfg.threads > 1:
            chunks = np.array_split(np.arange(cfg.reps), cfg.threads)
            with ThreadPoolExecutor(cfg.threads) as pool:
                list(pool.map(work, chunks))
        else:
            work(range(cfg.reps))

        for m in cfg.estimators:
            v = vals[m]
            ok = np.isfinite(v)
            err = v[ok] - lam
            used = int(ok.sum())
            normality = None
            if m is Method.JITTERED:
                d = deltas[np.isfinite(deltas)]
                if d.size >= 3:
                    normality = normality_summary(d)
            rows.append(
                GridRow(
                    lam=lam,
                    estimator=m,
                    bias=float(np.mean(err)) if used else math.nan,
                    rmse=float(math.sqrt(np.mean(err * err))) if used else math.nan,
                    mean_estimate=float(np.mean(v[ok])) if used else math.nan,
                    reps_used=used,
                    failures=cfg.reps - used,
                    pi=cont.pi if cont is not None else 0.0,
                    sqrt_h=int(cont.sqrt_h) if cont is not None else 0,
                    normality=normality,
                    wall_time_s=float(secs[m].sum()),
                )
            )
    return GridReport(config=cfg, rows=rows)


@dataclass
class BenchRow:
    method: Method
    n: int
    mean_s: float | None
    reps: int
    footprint_bytes: int


@dataclass
class BenchTable:
    lam: float
    sizes: list
    rows: list

    def time(self, method, n):
        method = Method(method)
        for r in self.rows:
            if r.method is method and r.n == n:
                return r.mean_s
        raise KeyError((method, n))


def estimate_footprint(method, n: int, lam: float = math.pi) -> int:
    """Rough peak memory in bytes for estimating on ``n`` int64 counts, input included."""
    method = Method(method)
    base = 8 * n
    if method is Method.MLE:
        return base
    if method is Method.MEDIAN_RAW:
        return 2 * base
    if method is Method.JITTERED:
        if n >= est.FAST_PATH_MIN_N:
            # largest histogram bin plus per-chunk scratch
            mode = max(0, math.floor(lam))
            p_mode = math.exp(mode * math.log(lam) - lam - math.lgamma(mode + 1.0))
            return base + int(8 * n * p_mode) + 40 * est._CHUNK
        return base + 3 * base
    # Tukey: jittered start plus a histogram of the counts
    return estimate_footprint(Method.JITTERED, n, lam) + 16 * (int(lam + 20 * math.sqrt(lam)) + 64)


def bench(sizes, lam=math.pi, methods=tuple(Method), reps: int = 10, memory_budget_bytes: float = 4e9, seed: int = 0) -> BenchTable:
    """Mean wall time per (method, n) over ``reps`` datasets.

    Data are drawn once per (n, rep) and shared by every method. Sizes whose
    estimated footprint exceeds the budget are skipped and reported as
    ``mean_s=None``.
    """
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes):
        raise ValueError("sizes must be sorted ascending")
    methods = tuple(Method(m) for m in methods)
    rows = []
    for si, n in enumerate(sizes):
        feasible = {m: estimate_footprint(m, n, lam) <= memory_budget_bytes for m in methods}
        totals = dict.fromkeys(methods, 0.0)
        if any(feasible.values()):
            for rep in range(reps):
                sample = CountSample(poisson_variates(lam, n, stream(seed, si, rep, Purpose.SAMPLE)))
                for m in methods:
                    if not feasible[m]:
                        continue
                    t0 = time.perf_counter()
                    est.estimate(sample, m, seed=rep)
                    totals[m] += time.perf_counter() - t0
                del sample
        for m in methods:
            rows.append(
                BenchRow(
                    method=m,
                    n=n,
                    mean_s=totals[m] / reps if feasible[m] else None,
                    reps=reps if feasible[m] else 0,
                    footprint_bytes=estimate_footprint(m, n, lam),
                )
            )
    return BenchTable(lam=float(lam), sizes=sizes, rows=rows)
