"""
The median of a jittered Poisson count
======================================

A Poisson count ``N`` has a staircase cdf, so its median jumps by whole
units as the intensity moves. Adding ``U ~ Uniform(0, 1)`` smooths that out:
``Z = N + U`` has a density, and its median tracks ``lambda + 1/3`` with a
small oscillating correction ``H(frac(lambda)) / lambda``.
"""

import numpy as np

from jitmed import jitter_theory as jt
from jitmed.poisson_core import integer_median, jittered_cdf

# The raw median only takes integer values; the jittered one moves smoothly.
print(f"{'lambda':>8} {'Me_N':>6} {'Me_Z':>10} {'lambda+1/3':>11}")
for lam in (1.0, 1.5, 2.0, 2.5, 3.0):
    sol = jt.theoretical_median(lam)
    print(f"{lam:8.2f} {integer_median(lam):6d} {sol.median:10.6f} {lam + 1 / 3:11.6f}")

# For lambda = 1 the median sits in [1, 2) where F_Z(t) = e^-1 (1 + (t - 1)),
# which gives exactly e/2.
print("\nMe_Z at lambda=1:", jt.theoretical_median(1.0).median, " e/2 =", np.e / 2)
print("F_Z(e/2) =", jittered_cdf(1.0, np.e / 2))

# The correction H is a piecewise cubic in the fractional part of lambda,
# bounded by -8/405 and 4/135.
xs = np.linspace(0, 1, 11)
print("\n   x      H(x)")
for x, h in zip(xs, jt.h_function(xs)):
    print(f"{x:5.2f} {h:+.6f}")
print("inf H =", jt.H_INF, " sup H =", jt.H_SUP)

# lambda * (Me_Z - lambda - 1/3) converges to H(frac lambda); the gap shrinks like 1/lambda.
print("\n     m   x   lambda*delta      H(x)      gap")
for x in (0.0, 0.5, 2 / 3):
    for m in (10, 100, 1000):
        sol = jt.theoretical_median(m + x)
        ld = (m + x) * sol.delta
        print(f"{m:6d} {x:4.2f} {ld:+.8f} {sol.h_at_frac:+.8f} {abs(ld - sol.h_at_frac):.2e}")

# The proof machinery: w_n(x, k) approaches 1/2 monotonically, increasing when
# k < H(x) and decreasing when k > H(x). Delta_n tracks its rescaled increments.
print("\nDelta_n for x=0.5 around k = H(0.5):")
h5 = float(jt.h_function(0.5))
for k in (h5 - 0.01, h5 + 0.01):
    n0, sign = jt.monotone_onset(0.5, k, n_max=3000)
    print(f"  k={k:+.4f}: monotone from n0={n0}, direction {'up' if sign > 0 else 'down'}")
for n in (100, 1000, 10_000):
    print(f"  n={n:6d} residual={jt.expansion_residual(n, 0.5, h5 + 0.01):+.3e}")
