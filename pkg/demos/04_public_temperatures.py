# %% [markdown]
# # Hourly temperatures from two cities
#
# Seattle and San Francisco, January to February 2010, one reading per hour
# (see `tests/data/README.md`). The sink picks which city sleeps and rotates
# the role when the two fit equally well.

# %%
from pathlib import Path

import numpy as np

from vsf import SimConfig, align_traces, load_csv, run_baseline_lms, run_simulation

path = Path(__file__).resolve().parents[1] / "tests" / "data" / "seattle_sf_2010_hourly.csv"
traces = align_traces(load_csv(path, unit="degC"))
for t in traces:
    print(f"{t.node_id:8s} mean {t.values.mean():6.2f} degC  std {t.values.std():5.2f}")

# %%
cfg = SimConfig(operational_len=20, revalidation_len=5)
report = run_simulation(cfg, traces)
slept = [r for r in report.records if r.action == "Slept"]
rel = np.array([r.abs_error / abs(r.actual) for r in slept])
print(f"dormant slots: {len(slept)}")
print(f"mean relative error while dormant: {100 * rel.mean():.2f}%")
print(f"mean absolute error while dormant: {np.mean([r.abs_error for r in slept]):.3f} degC")

# %% [markdown]
# Who slept when: roles after each revalidation.

# %%
history = [a.type1()[0] if a.type1() else "-" for a in report.assignments]
print(" ".join(history))

# %%
base = run_baseline_lms(cfg, traces)
print(f"energy: VSF {report.ledger.grand_total():.3f} J, LMS only {base.ledger.grand_total():.3f} J")
