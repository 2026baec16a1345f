"""
Signed sequential ranks and the three scores
============================================

Every observation is ranked against the stream seen so far, so the chart
needs no estimate of location or scale.  Here we look at the raw ranks and
check that the scores are centred and scaled exactly, whatever the data.
"""

import itertools

import numpy as np

from ssrcusum import sequential_ranks, xi_dispersion, xi_location

rng = np.random.default_rng(1)
x = rng.standard_t(3, 12)

signs, ranks = sequential_ranks(x)
for i, (v, s, r) in enumerate(zip(x, signs, ranks), start=1):
    print(f"{i:3d}  x={v:+.3f}  sign={s:+d}  rank={r:2d}/{i:<2d}  "
          f"W={xi_location('w', i, s, r):+.3f}  VdW={xi_location('vdw', i, s, r):+.3f}  "
          f"W2={xi_dispersion(i, r):+.3f}")

# Rescaling the data changes nothing downstream of the ranks.
print(np.array_equal(sequential_ranks(1000 * x)[1], ranks))

# Under the null, (sign, rank) is uniform on {-1, 1} x {1..i}.  Averaging over
# all 2i pairs gives the exact moments of the statistic at step i.
for i in (1, 10, 50):
    w = [xi_location("w", i, s, r) for s, r in itertools.product((-1, 1), range(1, i + 1))]
    print(i, np.mean(w), np.mean(np.square(w)))
