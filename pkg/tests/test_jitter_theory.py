import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import mp_w, mp_delta
from jitmed.jitter_theory import (
    H_INF,
    H_SUP,
    Branch,
    branch_of,
    c_n,
    delta_sequence,
    expansion_residual,
    h_function,
    monotone_onset,
    theoretical_median,
    w_sequence,
    w_value,
)
from jitmed.poisson_core import cdf, jittered_cdf, pmf






def bisect_median(lam):
    lo, hi = 0.0, lam + 20 * math.sqrt(lam) + 20
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if jittered_cdf(lam, mid) < 0.5:
            lo = mid
        else:
            hi = mid
    return hi


# --- H ---------------------------------------------------------------------


def test_h_examples():
    assert h_function(0.0) == pytest.approx(4 / 135, abs=1e-15)
    assert h_function(2 / 3) == pytest.approx(-8 / 405, abs=1e-15)
    assert h_function(1.0) == pytest.approx(4 / 135, abs=1e-15)
    assert h_function(1 / 3) == pytest.approx(2 / 405, abs=1e-15)


def test_h_branches_agree_at_two_thirds():
    x = 2 / 3
    low = x * x * (x - 1) / 3 + 4 / 135
    high = x * (x * x - 4 * x + 5) / 3 - 86 / 135
    assert low == pytest.approx(high, abs=1e-15)


def test_h_extremes():
    xs = np.linspace(0, 1, 200_001)
    hs = h_function(xs)
    assert abs(hs.min() - H_INF) <= 1e-9
    assert abs(hs.max() - H_SUP) <= 1e-9
    assert H_INF == -8 / 405 and H_SUP == 4 / 135


def test_h_vectorized_and_domain():
    out = h_function([0.0, 0.5, 1.0])
    assert out.shape == (3,)
    for bad in (-0.01, 1.01, math.nan):
        with pytest.raises(ValueError):
            h_function(bad)


# --- exact median ----------------------------------------------------------


def test_median_lambda_one():
    sol = theoretical_median(1.0)
    assert sol.median == pytest.approx(math.e / 2, abs=1e-14)
    assert sol.delta == pytest.approx(math.e / 2 - 4 / 3, abs=1e-14)


def test_median_lambda_ten():
    sol = theoretical_median(10.0)
    assert 10.33 <= sol.median <= 10.34
    assert abs(sol.median - (10 + 1 / 3 + h_function(0.0) / 10)) <= 5e-3
    # 60-digit value of the in-bin root
    assert sol.median == pytest.approx(10.33626627380973, abs=1e-12)


def test_median_lambda_100_5():
    sol = theoretical_median(100.5)
    assert abs(sol.delta * 100.5 - h_function(0.5)) <= 2e-3
    assert sol.h_at_frac == pytest.approx(-1 / 24 + 4 / 135, abs=1e-15)


@pytest.mark.parametrize("lam", [0.01, 0.3, 1.0, 2.5, 7.0, 33.3, 250.0, 1e4])
def test_median_matches_bisection(lam):
    sol = theoretical_median(lam)
    assert sol.median == pytest.approx(bisect_median(lam), abs=1e-9 * max(1.0, lam))
    assert jittered_cdf(lam, sol.median) == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(lam=st.floats(1e-3, 100.0))
def test_chen_rubin_containment(lam):
    med = theoretical_median(lam).median
    assert -math.log(2) <= med - lam <= 4 / 3


@pytest.mark.parametrize("x", [0.0, 0.25, 0.5, 2 / 3, 0.9])
def test_correction_converges_in_m(x):
    errs = [abs((m + x) * theoretical_median(m + x).delta - h_function(x)) for m in (50, 100, 200)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 2e-3


# --- w_n -------------------------------------------------------------------


def test_w_first_term():
    assert w_value(1, 0.0, 0.0) == pytest.approx(4 / 3 * math.exp(-1), rel=1e-14)


@pytest.mark.parametrize("n,x,k", [(1, 0.0, 0.0), (7, 0.3, 0.1), (40, 0.9, -0.5), (300, 0.5, 0.02), (25, 0.66, 1.0)])
def test_w_closed_form_is_jittered_cdf(n, x, k):
    lam = n + x
    direct = jittered_cdf(lam, lam + 1 / 3 + k / lam)
    assert w_value(n, x, k) == pytest.approx(direct, abs=1e-13)
    assert w_value(n, x, k) == pytest.approx(float(mp_w(n, x, k)), abs=1e-13)


def test_w_below_half_for_x_zero():
    for n in list(range(1, 200)) + list(range(200, 10_001, 97)):
        assert w_value(n, 0.0, 0.0) < 0.5


def test_w_tends_to_half():
    assert abs(w_value(1000, 0.5, h_function(0.5)) - 0.5) <= 1e-3


def test_branch_selection():
    assert branch_of(10, 0.2, 0.0) is Branch.LOW
    assert branch_of(10, 0.8, 0.0) is Branch.HIGH
    # exact tie goes high for k >= 0
    assert branch_of(10, 2 / 3, 0.0) is Branch.HIGH
    with pytest.raises(ValueError):
        branch_of(1, 0.0, 100.0)
    with pytest.raises(ValueError):
        branch_of(0, 0.0, 0.0)
    with pytest.raises(ValueError):
        branch_of(3, 1.0, 0.0)


def test_w_sequence_point():
    pt = w_sequence(50, 0.25, 0.0)
    assert pt.branch is Branch.LOW
    assert pt.w == w_value(50, 0.25, 0.0)
    assert pt.delta_n == delta_sequence(50, 0.25, 0.0)


def test_w_sequence_nan_on_branch_switch():
    # s = x + k/(n+x) crosses 2/3 between n = 1 and n = 2 here
    x, k = 0.5, 0.4
    assert branch_of(1, x, k) is not branch_of(2, x, k)
    assert math.isnan(w_sequence(1, x, k).delta_n)
    with pytest.raises(ValueError):
        delta_sequence(1, x, k)


# --- c_n -------------------------------------------------------------------


def test_c_at_v_one_is_one():
    for n in (1, 10, 1000, 10**6):
        for x in (0.0, 0.3, 0.99):
            assert c_n(n, 1.0, x) == 1.0


def test_c_direct_value():
    # (10/11)^11 e, evaluated with mpmath
    assert c_n(10, 0.0, 0.0) == pytest.approx(0.95274119794602040, rel=1e-14)


def test_c_large_n_expansion():
    n, x = 10_000, 0.3
    u = n + 1 + x
    expansion = 1 + (x - 0.5) / u + (x * x / 2 - 5 / 24) / u**2
    assert abs(c_n(n, 0.0, x) - expansion) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 10**6), v=st.floats(0, 1), x=st.floats(0, 0.999))
def test_c_matches_extended_precision(n, v, x):
    with mp.workdps(40):
        ref = ((mp.mpf(n) + v + x) / (mp.mpf(n) + 1 + x)) ** (n + 1) * mp.exp(1 - mp.mpf(v))
    assert c_n(n, v, x) == pytest.approx(float(ref), rel=1e-13)


def test_c_vectorized():
    out = c_n(20, np.array([0.0, 0.5, 1.0]), 0.1)
    assert out.shape == (3,) and out[-1] == 1.0


# --- Delta_n ---------------------------------------------------------------


@pytest.mark.parametrize(
    "x,k",
    [(0.0, 0.0), (0.5, h_function(0.5) + 0.01), (0.5, h_function(0.5) - 0.01), (2 / 3, H_INF), (0.8, 1.0), (0.25, -0.2)],
)
def test_delta_closed_form_matches_difference(x, k):
    for n in (1, 2, 3, 5, 10, 20, 50, 100, 150, 200):
        try:
            d = delta_sequence(n, x, k)
        except ValueError:
            continue
        ref = float(mp_delta(n, x, k))
        assert abs(d - ref) <= 1e-6 * abs(ref) + 1e-300


def test_delta_signs():
    assert delta_sequence(1000, 0.0, 0.0) > 0
    assert delta_sequence(1000, 0.8, 1.0) < 0


@pytest.mark.parametrize("x,k", [(0.0, 0.0), (0.5, h_function(0.5) + 0.01), (0.5, h_function(0.5) - 0.01), (2 / 3, H_INF)])
def test_expansion_residual_decreases(x, k):
    res = [abs(expansion_residual(n, x, k)) for n in (100, 1000, 10_000)]
    assert res[0] > res[1] > res[2]


def test_residual_vanishes_on_boundary():
    assert abs(expansion_residual(10_000, 2 / 3, H_INF)) <= 1e-2


@pytest.mark.parametrize("x", [0.1, 0.5, 0.9])
def test_delta_n_squared_vanishes_when_k_is_h(x):
    k = h_function(x)
    vals = [abs(delta_sequence(n, x, k)) * n * n for n in (100, 1000, 10_000)]
    assert vals[0] > vals[1] > vals[2]


def test_monotone_onset():
    n0, sign = monotone_onset(0.0, 0.0, n_max=2000)
    assert sign == 1 and 1 <= n0 < 2000
    n0, sign = monotone_onset(0.8, 1.0, n_max=2000)
    assert sign == -1
    # once monotone, the direct differences agree in sign
    ws = [w_value(n, 0.8, 1.0) for n in range(n0, n0 + 50)]
    assert all(b < a for a, b in zip(ws, ws[1:]))
