# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # When is honesty a best response?
#
# The toy instance has policy values 1, 0.8 and 0 and a mechanism that
# punishes the expert demonstration.  Above alpha* = 5/6 the learning-phase
# payoff is large enough that the expert wins anyway.

# %%
from mpag.incentives import alpha_honesty_threshold, best_response, same_behaviour, threshold_toy, value_spectrum

toy = threshold_toy()
spectrum = value_spectrum(toy.mdp, toy.reward)
print(spectrum, "alpha* =", alpha_honesty_threshold(spectrum))
for a in (0.0, 0.5, 0.8, 0.83, 0.84, 0.9, 1.0):
    br = best_response(toy.mdp, 0, [], toy.mechanism, a, toy.reward)
    print(a, "expert" if same_behaviour(toy.mdp, br, toy.expert) else "deviates")
