# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Distortion of the ordinal elicitation mechanism
#
# Worst sampled ratio of optimal to achieved welfare for each M, against
# c sqrt(M log M) with c fitted on M <= 10.

# %%
import numpy as np

from mpag.mechanisms import EfficientOrdinalMechanism, distortion_estimate

for basis in ("full", "committed"):
    rep = distortion_estimate(EfficientOrdinalMechanism(), profiles_per_M=10_000, seed=0, basis=basis)
    print(basis, "c =", round(rep.c, 3), "least squares c =", round(rep.c_lsq, 3), "validated", rep.validate())
    for m, d, b in zip(rep.M_values, rep.max_distortion, rep.fitted_bound):
        print(f"  M={m:2d}  max {d:.3f}  bound {b:.3f}")
