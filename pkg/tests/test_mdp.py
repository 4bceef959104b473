import itertools

import numpy as np
import pytest

from mpag.attack import expert_trajectory
from mpag.experiments import GRID_LAYOUT
from mpag.mdp import (
    FiniteMdp,
    LinearReward,
    Policy,
    Trajectory,
    WelfareAggregator,
    discounted_feature_counts,
    enumerate_policies,
    expected_feature_counts,
    flow_violation,
    gridworld,
    occupancy_from_policy,
    policy_from_occupancy,
    policy_value,
    random_mdp,
    rollout,
    state_distributions,
    trajectory_return,
    value_iteration,
)


def fig_grid(horizon=40):
    return gridworld(5, 6, GRID_LAYOUT, horizon, 0.95)


def test_validation():
    P = np.ones((2, 1, 2)) / 2
    with pytest.raises(ValueError):
        FiniteMdp(P * 2, [1, 0], np.ones((2, 1)), 3)
    with pytest.raises(ValueError):
        FiniteMdp(P, [0.5, 0.4], np.ones((2, 1)), 3)
    with pytest.raises(ValueError):
        FiniteMdp(P, [1, 0], np.ones((3, 1)), 3)
    with pytest.raises(ValueError):
        FiniteMdp(P, [1, 0], np.ones((2, 1)), 3, discount=0.0)
    mdp = FiniteMdp(P, [1, 0], np.ones((2, 2)), 3)
    with pytest.raises(ValueError):
        value_iteration(mdp, LinearReward([1.0]))


def test_single_state_value_is_geometric():
    g, T = 0.9, 7
    mdp = FiniteMdp(np.ones((1, 1, 1)), [1.0], [[2.0]], T, g)
    policy, value = value_iteration(mdp, LinearReward([0.5]))
    assert np.all(policy.probs == 1.0)
    assert value == pytest.approx(0.5 * 2.0 * (1 - g**T) / (1 - g), rel=1e-12)


def test_zero_reward_ties_to_action_zero():
    mdp = fig_grid(10)
    policy, value = value_iteration(mdp, LinearReward(np.zeros(3)))
    assert value == 0
    assert np.all(policy.greedy_actions()[:-1] == 0)


def test_vi_matches_path_search_on_small_grid():
    regions = [[(0, 2)], [(2, 2), (1, 2)], [(1, 0)]]
    mdp = gridworld(3, 3, regions, 6, 0.95)
    w = LinearReward([0.9, 1.0, 0.0])
    _, value = value_iteration(mdp, w)
    r = w.state_rewards(mdp)
    best = -np.inf
    for acts in itertools.product(range(4), repeat=5):
        s, total = 6, r[6]
        for t, a in enumerate(acts, start=1):
            s = int(np.argmax(mdp.transition[s, a]))
            total += 0.95**t * r[s]
        best = max(best, total)
    assert value == pytest.approx(best, abs=1e-12)


def test_vi_value_equals_expert_trajectory_return():
    mdp = fig_grid()
    w = LinearReward([0.9, 1.0, 0.0])
    _, value = value_iteration(mdp, w)
    assert trajectory_return(expert_trajectory(mdp, w), mdp, w) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_vi_matches_enumeration(seed):
    mdp = random_mdp(3, 2, 4, 2, seed=seed)
    w = LinearReward(np.random.default_rng(seed).normal(size=2))
    _, value = value_iteration(mdp, w)
    best = max(policy_value(mdp, p, w) for p in enumerate_policies(mdp))
    assert value == pytest.approx(best, abs=1e-12)


def test_rollout_determinism():
    mdp = fig_grid(12)
    policy, _ = value_iteration(mdp, LinearReward([0, 1, 0]))
    assert rollout(mdp, policy, 1) == rollout(mdp, policy, 99)
    noisy = random_mdp(4, 2, 6, 2, seed=3)
    u = Policy.uniform(noisy)
    assert rollout(noisy, u, 5) == rollout(noisy, u, 5)


def test_rollout_statistics_match_forward_pass():
    P = np.array([[[0.7, 0.3], [0.2, 0.8]], [[0.5, 0.5], [0.9, 0.1]]])
    mdp = FiniteMdp(P, [0.6, 0.4], [[1.0, 0.0], [0.0, 1.0]], 3, 0.9)
    u = Policy.uniform(mdp)
    rng = np.random.default_rng(0)
    n = 100_000
    visits = np.zeros((3, 2))
    counts = np.zeros((n, 2))
    for i in range(n):
        tr = rollout(mdp, u, rng)
        visits[np.arange(3), tr.states] += 1
        counts[i] = discounted_feature_counts(tr, mdp)
    d = state_distributions(mdp, u)
    sigma = np.sqrt(d * (1 - d) / n)
    assert np.all(np.abs(visits / n - d) <= 3 * sigma)
    mean, se = counts.mean(axis=0), counts.std(axis=0) / np.sqrt(n)
    assert np.all(np.abs(mean - expected_feature_counts(mdp, u)) <= 3 * se)


def test_feature_counts_examples():
    g, T = 0.8, 6
    mdp = FiniteMdp(np.ones((1, 1, 1)), [1.0], [[1.0, 0.0]], T, g)
    tr = Trajectory(np.zeros(T, dtype=int), np.zeros(T - 1, dtype=int))
    assert discounted_feature_counts(tr, mdp) == pytest.approx([(1 - g**T) / (1 - g), 0.0])
    grid = gridworld(5, 6, GRID_LAYOUT, 9, 1.0)
    tr = rollout(grid, value_iteration(grid, LinearReward([0, 1, 0]))[0], 0)
    assert np.array_equal(discounted_feature_counts(tr, grid), grid.features[tr.states].sum(axis=0))


def test_expert_counts_concentrate_on_first_feature():
    mdp = fig_grid()
    w = LinearReward([1.0, 0.0, 0.0])
    counts = discounted_feature_counts(expert_trajectory(mdp, w), mdp)
    assert np.argmax(counts) == 0


def test_expected_counts_of_deterministic_policy_equal_rollout():
    mdp = fig_grid(15)
    policy, _ = value_iteration(mdp, LinearReward([0.9, 1.0, 0.0]))
    np.testing.assert_allclose(expected_feature_counts(mdp, policy),
                               discounted_feature_counts(rollout(mdp, policy, 0), mdp), atol=1e-12)


def test_symmetric_chain_gives_symmetric_features():
    P = np.array([[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]])
    mdp = FiniteMdp(P, [0.5, 0.5], np.eye(2), 5, 0.9)
    f = expected_feature_counts(mdp, Policy.uniform(mdp))
    assert f[0] == pytest.approx(f[1], abs=1e-15)


def test_occupancy_round_trip():
    mdp = random_mdp(5, 3, 6, 2, seed=2)
    rng = np.random.default_rng(0)
    policy = Policy(rng.dirichlet(np.ones(3), size=(6, 5)))
    occ = occupancy_from_policy(mdp, policy)
    assert flow_violation(mdp, occ) <= 1e-9
    np.testing.assert_allclose(occ.rho.sum(axis=(1, 2)), 1.0, atol=1e-12)
    back = policy_from_occupancy(mdp, occ)
    d = state_distributions(mdp, policy)
    reach = d > 1e-12
    np.testing.assert_allclose(back.probs[reach], policy.probs[reach], atol=1e-12)


def test_policy_from_zero_mass_is_uniform():
    mdp = fig_grid(4)
    occ = occupancy_from_policy(mdp, value_iteration(mdp, LinearReward([1, 0, 0]))[0])
    back = policy_from_occupancy(mdp, occ)
    assert np.allclose(back.probs[1, 0], 0.25)  # cell (0, 0) is unreachable at t = 1


def test_welfare_aggregators():
    r = [np.array([1.0, 0.0, 2.0]), np.array([0.0, 3.0, 1.0])]
    assert np.array_equal(WelfareAggregator("utilitarian")(r), [1.0, 3.0, 3.0])
    assert np.array_equal(WelfareAggregator("egalitarian")(r), [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        WelfareAggregator("nash")
