"""Baselines on a shared channel draw.

Runs every multiple-access / surface configuration on the same realization.
The typical ordering (optimized energy-splitting surface on top, no surface
at the bottom) holds on most draws; single-seed inversions between adjacent
baselines do occur, which is why the shipped comparisons average over seeds.
"""

import starsec
from starsec.subproblems import BASELINES, sensing_only

config = starsec.desk_default()
seed = starsec.derive_run_seed(config.master_seed, 1)
geometry = starsec.sample_geometry(config, seed)
channels = starsec.sample_channels(config, geometry, seed)
consts = sensing_only(channels, config)

print(f"{'baseline':<16} {'min secrecy':>12} {'iterations':>11} {'status':>10}")
for baseline in BASELINES:
    trace = starsec.run_ao(channels, config, baseline, seed, consts=consts)
    print(
        f"{baseline:<16} {trace.oracle_omega:>12.4f} "
        f"{trace.n_iterations:>11d} {trace.status:>10}"
    )
