"""
Power sweeps
============

Mean EE over a handful of seeds as the transmit budget and the static
power change. The same runs are available from the command line:

    eebeam sweep-pt --out results/ --seeds 1,2,3,4,5
    eebeam sweep-p0 --out results/ --seeds 1,2,3,4,5 --jobs 4
"""

import sys

from eebeam.experiments import ExperimentSpec, run_sweep_p0, run_sweep_pt

seeds = list(range(1, 6))

pt = run_sweep_pt(ExperimentSpec("sweep_pt", seeds=seeds))
print("P_T (dBW)  mean EE (Gbps/W)  ZF")
for r in pt.mean_rows():
    print("%6s     %.4f            %.4f" % (r["grid_dBW"], float(r["ee_gbps_per_W"]),
                                           float(r["zf_ee_gbps_per_W"])))

# ZF is blank at 6 dBW: equal power cannot meet every SINR threshold there.
# The EE-optimal precoder stops spending power once the budget is large
# enough, so its curve flattens while ZF (always at full power) falls

p0 = run_sweep_p0(ExperimentSpec("sweep_p0", seeds=seeds))
print("\nP0 (dBW)   mean EE (Gbps/W)")
for r in p0.mean_rows():
    print("%6s     %.4f" % (r["grid_dBW"], float(r["ee_gbps_per_W"])))

if len(sys.argv) > 1:
    pt.write(sys.argv[1])
    p0.write(sys.argv[1])
