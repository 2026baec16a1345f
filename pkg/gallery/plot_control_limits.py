"""
Control limits and run lengths
==============================

Because the chart is distribution free, one table of limits serves every
continuous symmetric in-control law.  We re-derive a small corner of the
Wilcoxon table and then look at detection delays after a shift.
"""

from ssrcusum import calibrate, distlab
from ssrcusum.arl_lab import ShiftScenario, ooc_arl
from ssrcusum.engine import CusumConfig

request = calibrate.CalibrationRequest("w", [0.25, 0.5], [100, 500], reps=5000,
                                       verify_reps=20_000, seed=1)
result = calibrate.solve_control_limit(request)
for (zeta, arl0), cell in result.cells.items():
    print(f"zeta={zeta} ARL0={arl0:g}: h={cell.h:.3f} "
          f"(published {calibrate.published_limit('w', zeta, arl0)})")

###############################################################################
# Conditional delay after a shift at tau=50, for a normal and a t3 stream.

config = CusumConfig.upper_only(0.25, 7.25)
for dist in (distlab.normal(), distlab.student_t(3)):
    for delta in (0.25, 0.5, 1.0):
        est = ooc_arl(ShiftScenario.location(dist, delta, 50), "w", config, 5000, seed=2)
        print(f"{dist.label:7s} delta={delta}: {est.arl:6.1f} +/- {est.se:.1f}")
