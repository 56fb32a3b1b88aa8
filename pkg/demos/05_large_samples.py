"""
Large samples: the histogram fast path and timings
==================================================

The jittered median never needs the whole jittered vector. Jitters are a hash
of ``(seed, index)``, so the estimator histograms the counts, finds the bin
holding the median rank, regenerates the jitters of that bin only and selects
within it. The result is bit-identical to sorting ``counts + jitters``.
"""

import math
import time
import tracemalloc

import numpy as np

from jitmed.estimators import histogram_median, jittered_values, lambda_jittered, sample_median
from jitmed.rng import stream
from jitmed.simulation import bench, poisson_variates

counts = poisson_variates(math.pi, 200_001, stream(5))
fast = histogram_median(counts, seed=11)
naive = sample_median(jittered_values(counts, 11))
print("fast path:", repr(fast), " naive:", repr(naive), " identical:", fast == naive)

big = poisson_variates(math.pi, 10**7, stream(6))
tracemalloc.start()
t0 = time.perf_counter()
est = lambda_jittered(big, seed=1)
elapsed = time.perf_counter() - t0
peak = tracemalloc.get_traced_memory()[1]
tracemalloc.stop()
print(f"\nn=1e7: estimate {est.value:.5f} in {elapsed:.3f}s, "
      f"auxiliary peak {peak / 1e6:.1f} MB for {big.nbytes / 1e6:.0f} MB of counts")
del big

# Mean wall time over 5 datasets per size; sizes over the memory budget print as NA.
table = bench([10**4, 10**5, 10**6, 10**9], reps=5, memory_budget_bytes=2e9)
print("\n" + f"{'method':>9}" + "".join(f"{n:>12.0e}" for n in table.sizes))
for method in dict.fromkeys(r.method for r in table.rows):
    cells = []
    for n in table.sizes:
        t = table.time(method, n)
        cells.append(f"{'NA':>12}" if t is None else f"{t:12.5f}")
    print(f"{method.value:>9}" + "".join(cells))
