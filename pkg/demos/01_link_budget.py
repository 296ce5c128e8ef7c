"""
Building a multibeam channel
============================

A GEO satellite with eight feeds serves eight users. The channel is a
link-budget amplitude per (user, feed) pair times a random phase per user.
"""

import numpy as np

import eebeam as eb
from eebeam.linkbudget import scenario_from_dict

cfg = scenario_from_dict(eb.default_scenario_dict())
params, gains, ch = cfg.realize(seed=1)

print("wavelength        %.4f m" % params.wavelength)
print("noise temperature %.2f K" % params.noise_temperature)
print("slant ranges      %.1f .. %.1f km" % (params.distances().min() / 1e3,
                                             params.distances().max() / 1e3))

# the amplitude matrix is what the feed gains become after path loss and
# noise normalisation; its diagonal dominates because each user sits in
# its own beam
D = eb.antenna_pattern_matrix(params, gains)
np.set_printoptions(precision=3, suppress=True, linewidth=110)
print("\n|H| (equal to D, the phases only rotate rows)")
print(np.abs(ch.H))
print("max | |H| - D | =", np.max(np.abs(np.abs(ch.H) - D)))

# a measured pattern can replace the synthetic one: a text table with a
# "format=db" or "format=linear" header, then one comma-separated row per user
import os, tempfile
path = os.path.join(tempfile.mkdtemp(), "gains.csv")
np.savetxt(path, 10 * np.log10(gains.gains + 1e-30), delimiter=",", header="format=db", comments="")
table = eb.load_gain_table(path, (8, 8))
print("\ntable round trip, max relative error:",
      np.max(np.abs(table.gains - gains.gains) / gains.gains.max()))
