"""Sensing-only benchmark: the max-min beampattern covariance.

Solves the covariance design with no communication constraints and scans the
resulting transmit beampattern over bearing, showing the power concentrated on
the two target directions.
"""

import math

import numpy as np

import starsec
from starsec.channel import steering_vector
from starsec.subproblems import sensing_only
from starsec.scenario import desk_default

config = desk_default()
seed = starsec.derive_run_seed(config.master_seed, 1)
geometry = starsec.sample_geometry(config, seed)
channels = starsec.sample_channels(config, geometry, seed)

consts = sensing_only(channels, config)
print("optimal beampattern gain per target:", np.round(consts.gain_opt, 4))
print("covariance trace:", round(float(np.real(np.trace(consts.r_opt))), 6), "W")

print("\nbearing (deg)   gain")
for deg in range(-90, 91, 10):
    a = steering_vector(math.radians(deg), config.n_bs_antennas,
                        config.element_spacing_wavelengths)
    gain = float(np.real(a.conj() @ consts.r_opt @ a))
    bar = "#" * int(round(40 * gain / max(consts.gain_opt)))
    print(f"{deg:>8}        {gain:6.3f} {bar}")
