import math

import numpy as np
import pytest
from scipy import stats

from jitmed.estimators import CountSample, Method
from jitmed.poisson_core import pmf
from jitmed.rng import stream
from jitmed.simulation import (
    INVERSION_MAX_LAMBDA,
    ContaminationConfig,
    MonteCarloConfig,
    bench,
    contaminate,
    estimate_footprint,
    normality_summary,
    poisson_sampler,
    poisson_variates,
    run_grid,
    snr_db,
    solve_h_from_snr,
)


def snr_oracle(lam, pi, target):
    best = None
    for s in range(1, 10_001):
        gap = abs(10 * math.log10(lam / (s * s * pi * (1 - pi))) - target)
        if best is None or gap < best[0]:
            best = (gap, s)
    return best[1]


# --- sampler ---------------------------------------------------------------


def test_tiny_lambda_gives_zeros():
    assert np.all(poisson_variates(1e-9, 1000, stream(0)) == 0)


def test_sampler_mean_band():
    x = poisson_variates(5.0, 10**6, stream(1))
    assert abs(x.mean() - 5.0) <= 0.009


def test_sampler_deterministic():
    a = poisson_variates(3.3, 500, stream(2, 1, 1))
    b = poisson_variates(3.3, 500, stream(2, 1, 1))
    assert np.array_equal(a, b)
    assert poisson_sampler(3.3, stream(2)) == poisson_sampler(3.3, stream(2))


@pytest.mark.parametrize("lam", [0.3, 4.0, 29.0, 31.0, 120.0, 5000.0])
def test_sampler_chi_square(lam):
    # both sides of the inversion / rejection switch
    x = poisson_variates(lam, 200_000, stream(3, int(lam)))
    s = math.sqrt(lam)
    lo, hi = max(0, int(lam - 4 * s)), int(lam + 4 * s) + 1
    ks = np.arange(lo, hi + 1)
    probs = np.array([pmf(lam, int(k)) for k in ks])
    probs[0] += 1 - sum(pmf(lam, int(k)) for k in range(lo, hi + 1)) - (1 - stats.poisson.cdf(hi, lam))
    probs[-1] += 1 - stats.poisson.cdf(hi, lam)
    obs = np.bincount(np.clip(x, lo, hi) - lo, minlength=ks.size)
    keep = probs * x.size >= 5
    exp = probs * x.size
    o = np.append(obs[keep], obs[~keep].sum())
    e = np.append(exp[keep], exp[~keep].sum())
    if e[-1] < 5:
        o, e = o[:-1], e[:-1]
    chi2 = ((o - e) ** 2 / e).sum()
    assert stats.chi2.sf(chi2, o.size - 1) > 1e-4


def test_sampler_chunked_path():
    x = poisson_variates(2.0, (1 << 22) + 10, stream(4))
    assert x.size == (1 << 22) + 10 and abs(x.mean() - 2.0) <= 0.005


def test_sampler_rejects_bad_lambda():
    for bad in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            poisson_variates(bad, 3, stream(0))
    assert INVERSION_MAX_LAMBDA == 30.0


# --- contamination ---------------------------------------------------------


def test_snr_examples():
    assert solve_h_from_snr(5.0, 0.1, -10.0) == 24
    assert snr_db(5.0, 0.1, 24) == pytest.approx(-10.157, abs=1e-3)
    assert snr_db(5.0, 0.1, 23) == pytest.approx(-9.787, abs=1e-3)
    assert solve_h_from_snr(5.0, 0.5, -10.0) == 14
    assert solve_h_from_snr(5.0, 0.0, -10.0) == 0


@pytest.mark.parametrize("lam", [1.0, 3.7, 10.0])
@pytest.mark.parametrize("pi", [0.01, 0.05, 0.1, 0.3, 0.5])
@pytest.mark.parametrize("target", [-20.0, -10.0, 0.0, 5.0])
def test_snr_matches_enumeration(lam, pi, target):
    assert solve_h_from_snr(lam, pi, target) == snr_oracle(lam, pi, target)


def test_contaminate_formula():
    out = contaminate([1, 2, 3], ContaminationConfig(pi=0.1, sqrt_h=5), outliers=[False, True, False])
    assert list(out.counts) == [1, 7, 3]


def test_contaminate_pi_zero_identity():
    s = CountSample([4, 5, 6])
    assert contaminate(s, ContaminationConfig(pi=0.0), rng=stream(0)) is s


def test_contaminated_fraction():
    base = np.zeros(10**6, dtype=np.int64)
    out = contaminate(base, ContaminationConfig(pi=0.1, sqrt_h=1), rng=stream(5))
    assert abs(out.counts.mean() - 0.1) <= 0.0012


def test_contamination_config_validation():
    with pytest.raises(ValueError):
        ContaminationConfig(pi=1.0)
    with pytest.raises(ValueError):
        ContaminationConfig(pi=0.0, sqrt_h=3)
    with pytest.raises(ValueError):
        contaminate([1], ContaminationConfig(pi=0.1, snr_target_db=-10.0), rng=stream(0))
    assert ContaminationConfig(pi=0.1, snr_target_db=-10.0).resolved(5.0).sqrt_h == 24


# --- Monte Carlo grid ------------------------------------------------------


def test_grid_shape():
    rep = run_grid(MonteCarloConfig(lambdas=(5.0,), n=50, reps=3, estimators=(Method.MLE,)))
    assert len(rep.rows) == 1
    assert rep.rows[0].reps_used == 3 and rep.rows[0].failures == 0


def test_grid_deterministic_across_threads():
    kw = dict(lambdas=(2.0, 7.5), n=60, reps=40, master_seed=9, estimators=tuple(Method))
    one = run_grid(MonteCarloConfig(**kw, threads=1)).numeric_fields()
    four = run_grid(MonteCarloConfig(**kw, threads=4)).numeric_fields()
    assert one == four
    assert run_grid(MonteCarloConfig(**kw)).numeric_fields() == one


def test_grid_seed_changes_results():
    a = run_grid(MonteCarloConfig(lambdas=(3.0,), n=30, reps=20, master_seed=1)).numeric_fields()
    b = run_grid(MonteCarloConfig(lambdas=(3.0,), n=30, reps=20, master_seed=2)).numeric_fields()
    assert a != b


def test_grid_mle_rmse():
    rep = run_grid(MonteCarloConfig(lambdas=(5.0,), n=200, reps=10_000, estimators=(Method.MLE,)))
    assert abs(rep.row(5.0, "mle").rmse / math.sqrt(5 / 200) - 1) <= 0.05


def test_grid_records_contamination():
    cfg = MonteCarloConfig(
        lambdas=(5.0,), n=50, reps=5, contamination=ContaminationConfig(pi=0.1, snr_target_db=-10.0)
    )
    row = run_grid(cfg).row(5.0, Method.JITTERED)
    assert row.sqrt_h == 24 and row.pi == 0.1
    assert set(row.normality) == {"mean", "sd", "qq_slope", "qq_intercept"}


def test_grid_counts_failures():
    # all-zero samples make Tukey undefined
    rep = run_grid(MonteCarloConfig(lambdas=(1e-9,), n=20, reps=4, estimators=(Method.TUKEY, Method.MLE)))
    assert rep.row(1e-9, "tukey").failures == 4
    assert math.isnan(rep.row(1e-9, "tukey").bias)
    assert rep.row(1e-9, "mle").failures == 0


def test_grid_config_validation():
    for kw in (dict(lambdas=()), dict(lambdas=(-1.0,)), dict(lambdas=(1.0,), n=0), dict(lambdas=(1.0,), estimators=())):
        base = dict(n=10, reps=2)
        base.update(kw)
        with pytest.raises(ValueError):
            MonteCarloConfig(**base)


def test_normality_summary_on_normal_data():
    z = stream(6).standard_normal(20_000)
    s = normality_summary(z)
    assert abs(s["mean"]) < 0.05 and abs(s["sd"] - 1) < 0.05 and abs(s["qq_slope"] - 1) < 0.05


# --- benchmark -------------------------------------------------------------


def test_bench_small():
    t = bench([10**4], reps=10)
    times = {m: t.time(m, 10**4) for m in Method}
    assert all(v is not None and math.isfinite(v) for v in times.values())
    assert times[Method.MLE] <= min(times[m] for m in Method if m is not Method.MLE)


def test_bench_budget_gives_na():
    t = bench([10**3, 10**9], methods=("mle",), reps=1, memory_budget_bytes=1e6)
    assert t.time("mle", 10**3) is not None
    assert t.time("mle", 10**9) is None


def test_bench_sizes_sorted():
    with pytest.raises(ValueError):
        bench([10, 5])


def test_footprint_ordering():
    n = 10**9
    assert estimate_footprint("mle", n) < estimate_footprint("jittered", n) < estimate_footprint("median", n)


@pytest.mark.slow
def test_bench_jittered_vs_raw_ratio():
    t = bench([10**7], methods=("jittered", "median"), reps=3)
    ratio = t.time("jittered", 10**7) / t.time("median", 10**7)
    assert 1.2 <= ratio <= 4.0
