# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Announcing versus demonstrating a plurality vote
#
# Three voters, three alternatives, utilities uniform on the simplex.

# %%
from mpag.manipulability import estimate_proportions, exact_proportions

est = estimate_proportions(1_000_000, seed=0)
for k, v in exact_proportions().items():
    print(f"{k:14s} closed form {float(v):.5f}  ({v})")
print(f"announce only  estimate    {est.p_announce_only:.5f} +/- {est.confidence_radius:.5f}")
print(f"both           estimate    {est.p_both:.5f}")
print(f"demo only      estimate    {est.p_demo_only:.5f}")
