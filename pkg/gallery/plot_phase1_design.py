"""
Designing a chart from Phase-I data
===================================

With a short in-control sample we estimate theta0 and theta1 through a
kernel density estimate, then turn target changes into reference values.
The estimate moves only a little when the bandwidth is halved or doubled.
"""

import numpy as np

from ssrcusum import distlab, phase1

rng = np.random.default_rng(5)
phase_one = 0.45 * rng.standard_t(6, 50)

design = phase1.design_from_data(phase_one, delta1=0.5, alpha=0.5)
print(design)

b = design.bandwidth
for factor in (0.5, 1.0, 2.0):
    t0 = phase1.theta0_hat(phase_one, bandwidth=factor * b)
    print(f"bandwidth {factor * b:.3f}: theta0_hat={t0:.3f}, zeta={t0 * 0.5 / 2:.3f}")

###############################################################################
# Without any Phase-I data, the presets are a reasonable start.

print(phase1.THETA0_NEAR_NORMAL, phase1.THETA0_HEAVY_TAILS, phase1.THETA1_DEFAULT)
print(distlab.theta0("w", distlab.student_t(6)).theta)
