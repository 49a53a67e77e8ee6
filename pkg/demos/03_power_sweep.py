"""Small Monte Carlo sweep over the transmit power budget.

Produces the same CSV the command-line runner writes; pipe the output file
into ``figplot`` (frontend/) to get the corresponding figure panel.
"""

from starsec.harness import SweepSpec, run_sweep

spec = SweepSpec(
    param="power_dbm",
    values=(10.0, 20.0, 30.0),
    baselines=("rsma-star-opt", "rsma-star-rand", "sdma-star-opt"),
    runs=5,
    master_seed=20250101,
    figure="demo-power",
    scale="desk",
).validate()

result = run_sweep(spec, out_dir="demo_output")
print(result.to_csv())
print("records and CSV written under demo_output/")
print("render with: figplot --figure fig3a --in demo_output/demo-power.csv --out demo-power.svg")
