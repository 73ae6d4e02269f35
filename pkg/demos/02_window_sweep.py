# %% [markdown]
# # Operational and revalidation window lengths
#
# Longer operational windows mean more multi-step prediction without any
# ground truth; longer revalidation windows give the filters more fresh data.
# Errors are averaged over all slots of both nodes and over ten seeds.

# %%
import numpy as np

from vsf import AffineLink, SimConfig, SineDrift, SyntheticSpec, generate_synthetic, run_simulation

datasets = [
    generate_synthetic(SyntheticSpec(2, 1000, SineDrift(200, 5.0, 0.05, offset=20.0),
                                     links=(AffineLink(0, 1, 2.0, 1.0, 0.1),), rng_seed=s))
    for s in range(10)
]


def mean_abs_error(cfg):
    per_seed = [np.mean([r.abs_error for r in run_simulation(cfg, d).records]) for d in datasets]
    return np.mean(per_seed), np.std(per_seed)


# %%
print(f"{'O_p':>4} {'R_p':>4} {'MAE':>8} {'std':>8}")
for O in (10, 20, 40, 80):
    for R in (5, 10, 20):
        m, s = mean_abs_error(SimConfig(operational_len=O, revalidation_len=R))
        print(f"{O:4d} {R:4d} {m:8.4f} {s:8.4f}")

# %% [markdown]
# Same sweep through the CLI, which writes one row per grid point:
#
#     vsf sweep --config demo.cfg --out sweep_out --grid "O_p:R_p=20:5,20:10,40:5" --jobs 3
