# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Bandit apprentice game
#
# One human: explore-then-commit recovers the best arm.  Two humans whose
# favourites differ from the welfare-optimal arm: the robot commits to a
# favourite and pays 0.1 per round forever.

# %%
import numpy as np

from mpag.bandit import (BanditProfile, Boltzmann, ExploreThenCommit, brute_force_dominance,
                         linear_regret_witness, regret_curve, simulate, truthfulness_threshold)

prof = linear_regret_witness(3)
print("utilities\n", prof.utilities, "\nwelfare", prof.welfare)
trace = simulate(prof, [Boltzmann(1e6)] * 2, ExploreThenCommit(50), 10_000, seed=0)
curve = regret_curve(trace, prof)
for t in (100, 1000, 5000, 9999):
    print(t, round(curve[t], 3))

# %% [markdown]
# Restricting to human 0 alone removes the conflict.

# %%
solo = BanditProfile(prof.utilities[:1])
tr = simulate(solo, [Boltzmann(1e6)], ExploreThenCommit(50), 1000, seed=0)
print("solo regret", regret_curve(tr, solo)[-1])

# %% [markdown]
# Truthfulness threshold versus exhaustive dominance on a 2x3 profile.

# %%
p = BanditProfile([[0.6, 0.3, 0.1], [0.1, 0.3, 0.6]])
print("threshold", truthfulness_threshold(p.utilities[0], 0.5))
for T in range(1, 7):
    print(T, brute_force_dominance(p, 0, T, 0.5))
