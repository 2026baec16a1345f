"""
Efficacy constants theta0 and theta1
====================================

A location shift of ``delta`` standard deviations moves the mean of the
location statistic by about ``theta0 * delta``; a scale change by a factor
``Delta`` moves the dispersion statistic by about ``theta1 * log(Delta)``.
Both constants are integrals over the in-control density.
"""

import math

from ssrcusum import distlab

families = {
    "t_inf": distlab.normal(),
    "t4": distlab.student_t(4),
    "t3": distlab.student_t(3),
    "t2": distlab.student_t(2),   # unit inter-quartile range
    "t1": distlab.student_t(1),
    "uniform": distlab.uniform(),
}

print(f"{'':8s}{'W':>8s}{'VdW':>8s}{'theta1':>8s}")
for name, dist in families.items():
    w = distlab.theta0("w", dist).theta
    v = distlab.theta0("vdw", dist).theta
    t1 = distlab.theta1(dist).theta
    print(f"{name:8s}{w:8.3f}{v:8.3f}{t1:8.3f}")

###############################################################################
# VdW stays at or above the normal-theory benchmark of 1 whenever the
# variance is finite; it drops below 1 only for the Cauchy (t1).  On the
# bounded uniform its integral does not converge at all.
# The reference value for a target shift follows directly:

theta0 = distlab.theta0("w", distlab.student_t(4)).theta
print("zeta for a 0.25 sigma shift:", round(theta0 * 0.25 / 2, 3))
print("zeta+ for a 50% scale increase:", round(math.log(1.5) / 2, 3))
