"""
One optimisation run against zero-forcing
=========================================
"""

import eebeam as eb
from eebeam.linkbudget import scenario_from_dict
from eebeam.metrics import gbps_per_watt

cfg = scenario_from_dict(eb.default_scenario_dict())
params, _, ch = cfg.realize(seed=3)

W, trace = eb.run(ch.H, params, eb.AlgorithmConfig(xi=1e-3))
print("start: %s, stop: %s after %d iterations" % (trace.init_method, trace.status,
                                                  trace.iterations))
print(trace.to_csv())

W_zf = eb.zero_forcing_precoder(ch.H, params.total_power_W)
args = (params.noise_power, params.beam_weights, params.static_power_W)
ee, ee_zf = (eb.energy_efficiency(ch.H, w, *args) for w in (W, W_zf))
print("alternating: %.4f Gbps/W" % gbps_per_watt(ee, params.bandwidth_Hz))
print("ZF:          %.4f Gbps/W" % gbps_per_watt(ee_zf, params.bandwidth_Hz))

# at 10 dBW the budget is still binding; rerun with a larger total_power_W
# and the optimum leaves part of it unused
print("power used %.3f W of %.1f W" % (eb.total_power(W), params.total_power_W))
print(eb.check_feasible(ch.H, W, params.noise_power, params.total_power_W,
                        params.sinr_thresholds))
