"""
Estimating an intensity from counts
===================================

Four estimators of ``lambda`` from the same sample: the jittered median minus
1/3, the sample mean (maximum likelihood), the raw sample median and Tukey's
redescending M-estimator.
"""

import math

import numpy as np

from jitmed import CountSample, Method, estimate, lambda_jittered, sigma_hat, sigma_stirling
from jitmed.rng import stream

counts = CountSample(stream(2024).poisson(7.3, 500))
print("n =", counts.n, " sample mean =", counts.counts.mean())

for method in Method:
    e = estimate(counts, method, seed=1)
    ci = "" if e.ci95 is None else f"  95% CI [{e.ci95[0]:.3f}, {e.ci95[1]:.3f}]"
    print(f"{method.value:>9}: {e.value:.4f}{ci}")

# The jittered estimate depends on the jitters, which are a pure function of the seed.
print("\nseed 1 twice:", lambda_jittered(counts, 1).value, lambda_jittered(counts, 1).value)
print("seed 2      :", lambda_jittered(counts, 2).value)

# Hand check with fixed jitters: median of [2.5, 3.5, 4.5] minus 1/3.
print("\n[2,3,4] with jitters 0.5:", lambda_jittered([2, 3, 4], jitters=[0.5, 0.5, 0.5]).value)

# The asymptotic standard deviation is 1 / (2 P(N = floor(lambda + 1/3)));
# for large lambda it approaches sqrt(pi lambda / 2), so the price paid over
# the mean is about sqrt(pi / 2) = 1.25 in standard error.
print("\nlambda   sigma_hat  sigma_stirling  ratio to sqrt(lambda)")
for lam in (1.0, 10.0, 100.0, 1e4):
    s = sigma_hat(lam)
    print(f"{lam:7g} {s:10.4f} {sigma_stirling(lam):14.4f} {s / math.sqrt(lam):10.4f}")
print("sqrt(pi/2) =", math.sqrt(math.pi / 2))
