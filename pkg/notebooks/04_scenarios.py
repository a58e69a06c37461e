# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#       jupytext_version: 1.15.0
# ---

# %% [markdown]
# # Scenario files
#
# Scenarios are TOML files with units in the key names. The package ships a
# few, and the command line runs them into CSV telemetry and SVG plots.

# %%
from diffdrive.cli import main, run_scenario
from diffdrive.output import read_csv
from diffdrive.scenario import emit_scenario, load_scenario, shipped_scenarios

for name, path in sorted(shipped_scenarios().items()):
    print(name)

# %%
sf = load_scenario(shipped_scenarios()["polyline"])
print(emit_scenario(sf))

# %%
res = run_scenario(sf, "demo_out")
cols = read_csv(res.csv_path.read_text())
print(res.csv_path, len(cols["t"]), "rows, final tracking error", cols["err"][-1])

# %% [markdown]
# The same through the command line, as it would be typed in a shell.

# %%
main(["run", "circle", "saturation", "--out-dir", "demo_out"])
