"""
Additive outliers and Tukey's M-estimator
=========================================

Each count is shifted by ``sqrt(h)`` with probability ``pi``; ``sqrt(h)`` is the
integer whose signal-to-noise ratio ``10 log10(lambda / (h pi (1 - pi)))`` is
closest to a target (here -10 dB). The mean breaks down quickly, the jittered
median degrades gracefully, and Tukey's estimator stays close to lambda.
"""

import numpy as np

from jitmed import Method, TukeyConfig
from jitmed.estimators import tukey_a, tukey_expectation, tukey_psi
from jitmed.simulation import ContaminationConfig, MonteCarloConfig, contaminate, run_grid, snr_db, solve_h_from_snr

lam = 5.0
for pi in (0.05, 0.1, 0.5):
    s = solve_h_from_snr(lam, pi, -10.0)
    print(f"pi={pi:4.2f}: sqrt(h)={s:3d}  SNR={snr_db(lam, pi, s):+.3f} dB")

print("\nfixed outlier mask:", contaminate([1, 2, 3], ContaminationConfig(pi=0.1, sqrt_h=5), outliers=[0, 1, 0]).counts)

# psi_{k,a} redescends: observations farther than k from the shifted centre get no weight.
print("\npsi at lambda=9, a=0, k=6 for y = 9, 12, 30, 40:", tukey_psi(np.array([9.0, 12.0, 30.0, 40.0]), 9.0, 0.0, 6.0))

# The correction a(lambda, k) makes E psi = 0 under the Poisson model; it fades as lambda grows.
print("\nlambda      a(lambda, 6)    E psi at a")
for lam_ in (1.0, 5.0, 50.0, 1e6):
    a = tukey_a(lam_, 6.0)
    print(f"{lam_:8g} {a:+.8f} {tukey_expectation(lam_, a, 6.0):+.2e}")

print("\nbias at lambda=5, n=200, 1000 replications:")
for pi in (0.0, 0.05, 0.1):
    cont = ContaminationConfig(pi=pi, snr_target_db=-10.0) if pi else None
    rep = run_grid(MonteCarloConfig(
        lambdas=(lam,), n=200, reps=1000, master_seed=4,
        estimators=(Method.MLE, Method.JITTERED, Method.TUKEY),
        contamination=cont, tukey=TukeyConfig(k=6.0, fixed_point_tol=1e-4),
    ))
    cells = "  ".join(f"{r.estimator.value} {r.bias:+.3f}" for r in rep.rows)
    print(f"  pi={pi:4.2f}: {cells}  (Tukey failures: {rep.row(lam, Method.TUKEY).failures})")
