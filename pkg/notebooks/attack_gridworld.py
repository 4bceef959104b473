# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Attacking pooled IRL on the gridworld
#
# Two humans demonstrate on the shipped 5x6 grid.  Human 1 likes feature 3;
# human 2 (the attacker) values features 1 and 2.  The robot runs MaxEnt IRL
# on both trajectories and plans on the result.  We compare the attacker's
# honest demonstration with the one produced by the occupancy program.

# %%
import numpy as np

from mpag.attack import build_attack, state_visits
from mpag.experiments import AttackConfig, attack_sweep
from mpag.mdp import LinearReward, grid_heatmap, rollout

cfg = AttackConfig()
mdp, results = attack_sweep(cfg)
res = results[0]

# %% [markdown]
# Utility table: one row per (lambda, alpha).

# %%
print("lambda alpha  expert  attack")
for lam, a, ue, ua, gap, it in res.rows:
    print(f"{lam:6g} {a:5.1f} {ue:7.3f} {ua:7.3f}")

# %% [markdown]
# Where each trajectory goes.  Rows are grid rows, top first.

# %%
def heat(traj):
    return grid_heatmap(cfg.rows, cfg.cols, state_visits(mdp, traj)).astype(int)

sol, ev = res.attacks[1.0]
print("opponent\n", heat(res.other))
print("honest attacker\n", heat(res.expert))
print("attack\n", heat(sol.best_response))
print("robot, honest\n", heat(rollout(mdp, res.expert_eval.robot.policy, 0)))
print("robot, attacked\n", heat(rollout(mdp, ev.robot.policy, 0)))

# %% [markdown]
# The target tau = 2 E[phi|w2] - phi(xi1) asks for negative feature 3 counts,
# which no trajectory can deliver; the solver gets as close as the polytope allows.

# %%
prob = build_attack(mdp, LinearReward(cfg.attacker_omega), res.other, 1.0)
print("target", np.round(prob.target, 3))
print("achieved", np.round(sol.occupancy.feature_counts(mdp), 3))
