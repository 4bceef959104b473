import numpy as np
import pytest

from mpag.irl import (
    DemonstrationSet,
    IrlConfig,
    empirical_feature_counts,
    human_utility,
    log_likelihood,
    log_likelihood_gradient,
    maxent_irl,
    mechanism_per_human,
    mechanism_pooled,
    soft_value_iteration,
)
from mpag.mdp import (
    FiniteMdp,
    LinearReward,
    Policy,
    Trajectory,
    WelfareAggregator,
    expected_feature_counts,
    gridworld,
    policy_value,
    random_mdp,
    rollout,
    state_distributions,
    value_iteration,
)


def chain(horizon=4, start=1):
    """Three-state line 0 - 1 - 2; action 0 moves left, action 1 moves right."""
    P = np.zeros((3, 2, 3))
    for s in range(3):
        P[s, 0, max(s - 1, 0)] = 1
        P[s, 1, min(s + 1, 2)] = 1
    phi = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    return FiniteMdp(P, np.eye(3)[start], phi, horizon, 0.9)


def four_state():
    """Deterministic 4-state, 2-action MDP with a point-mass start."""
    P = np.zeros((4, 2, 4))
    nxt = [[1, 2], [3, 0], [0, 3], [2, 1]]
    for s, (a0, a1) in enumerate(nxt):
        P[s, 0, a0] = P[s, 1, a1] = 1
    phi = np.array([[1.0, 0.0, 0.2], [0.0, 1.0, 0.5], [0.3, 0.0, 1.0], [0.5, 0.5, 0.0]])
    return FiniteMdp(P, np.eye(4)[0], phi, 5, 0.9)


def test_config_validation():
    with pytest.raises(ValueError):
        IrlConfig(grad_tolerance=0)
    with pytest.raises(ValueError):
        IrlConfig(max_iters=0)
    with pytest.raises(ValueError):
        DemonstrationSet([[]])


def test_soft_policy_forced_and_uniform():
    mdp = FiniteMdp(np.eye(3)[:, None, :], np.ones(3) / 3, np.eye(3), 4)
    assert np.all(soft_value_iteration(mdp, LinearReward([1.0, -2.0, 3.0])).probs == 1.0)
    mdp = random_mdp(4, 3, 5, 2, seed=0)
    np.testing.assert_allclose(soft_value_iteration(mdp, LinearReward([0.0, 0.0])).probs, 1 / 3, atol=1e-15)


@pytest.mark.parametrize("seed", range(3))
def test_soft_policy_approaches_hard_policy(seed):
    mdp = random_mdp(5, 3, 6, 3, seed=seed)
    w = np.random.default_rng(seed).normal(size=3)
    hard, _ = value_iteration(mdp, LinearReward(w))
    soft = soft_value_iteration(mdp, LinearReward(1e3 * w))
    reach = state_distributions(mdp, hard) > 0
    reach[-1] = False
    assert np.array_equal(soft.greedy_actions()[reach], hard.greedy_actions()[reach])


def test_soft_policy_survives_huge_rewards():
    mdp = random_mdp(4, 2, 5, 2, seed=1)
    p = soft_value_iteration(mdp, LinearReward([1e6, -1e6])).probs
    assert np.all(np.isfinite(p))


def test_reward_shift_invariance():
    mdp = random_mdp(5, 3, 6, 2, seed=4)
    r = np.random.default_rng(0).normal(size=5)
    a = soft_value_iteration(mdp, r).probs
    b = soft_value_iteration(mdp, r + 7.5).probs
    assert np.max(np.abs(a - b)) <= 1e-9


def test_gradient_matches_finite_differences():
    mdp = four_state()
    rng = np.random.default_rng(3)
    demos = [rollout(mdp, Policy.uniform(mdp), rng) for _ in range(6)]
    w = np.array([0.4, -0.3, 0.8])
    g = log_likelihood_gradient(mdp, demos, LinearReward(w))
    h = 1e-5
    fd = np.array([(log_likelihood(mdp, demos, LinearReward(w + h * e)) -
                    log_likelihood(mdp, demos, LinearReward(w - h * e))) / (2 * h) for e in np.eye(3)])
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) <= 1e-4


def test_feature_matching_on_soft_demos():
    mdp = gridworld(3, 4, [[(0, 3)], [(0, 0), (1, 0)], [(2, 3)]], 8, 0.95)
    w_true = LinearReward([1.0, 0.5, -0.5])
    gen = soft_value_iteration(mdp, w_true)
    rng = np.random.default_rng(0)
    demos = [rollout(mdp, gen, rng) for _ in range(40)]
    res = maxent_irl(mdp, demos)
    model = expected_feature_counts(mdp, soft_value_iteration(mdp, res.reward))
    gap = np.linalg.norm(empirical_feature_counts(mdp, demos) - model)
    assert gap <= 1e-3
    if res.converged:
        assert gap <= IrlConfig().grad_tolerance


def test_unvisited_feature_gets_smallest_weight():
    mdp = gridworld(3, 3, [[(2, 2)], [(0, 0)], [(2, 1)]], 6, 0.95)
    # from the bottom-left corner: step onto feature 3, linger, then settle on feature 1
    acts = [3, 1, 1, 3, 1]
    states = [6]
    for a in acts:
        states.append(int(np.argmax(mdp.transition[states[-1], a])))
    demo = Trajectory(np.array(states), np.array(acts))
    assert not mdp.features[demo.states, 1].any()
    w = maxent_irl(mdp, [demo]).reward.weights
    assert np.argmin(w) == 1


def test_pooling_invariance():
    mdp = chain(5)
    rng = np.random.default_rng(1)
    demos = [rollout(mdp, Policy.uniform(mdp), rng) for _ in range(4)]
    cfg = IrlConfig(max_iters=200)
    a = maxent_irl(mdp, DemonstrationSet([demos[:2], demos[:2]]), cfg).reward.weights
    b = maxent_irl(mdp, DemonstrationSet([demos[:2] + demos[:2]]), cfg).reward.weights
    assert np.array_equal(a, b)
    c = mechanism_pooled(mdp, DemonstrationSet([demos[:1], demos[1:]]), cfg)
    d = mechanism_pooled(mdp, DemonstrationSet([demos[3:], demos[:3]]), cfg)
    np.testing.assert_allclose(c.state_reward, d.state_reward, atol=1e-12)


def test_pooled_mechanism_recovers_shared_optimum():
    mdp = gridworld(4, 4, [[(0, 3)], [(3, 3)], [(0, 0)]], 10, 0.95)
    w = LinearReward([1.0, 0.4, 0.0])
    expert, best = value_iteration(mdp, w)
    demo = rollout(mdp, expert, 0)
    out = mechanism_pooled(mdp, DemonstrationSet([[demo], [demo]]))
    assert policy_value(mdp, out.policy, w) >= 0.98 * best


def test_constant_features_tie():
    mdp = FiniteMdp(random_mdp(3, 2, 4, 1, seed=0).transition, [1, 0, 0], np.ones((3, 1)), 4)
    demo = rollout(mdp, Policy.uniform(mdp), 0)
    out = mechanism_pooled(mdp, [demo], IrlConfig(max_iters=50))
    assert np.all(out.policy.greedy_actions() == 0)


def test_per_human_single_principal_equals_pooled():
    mdp = chain(5)
    demos = [rollout(mdp, Policy.uniform(mdp), s) for s in range(3)]
    cfg = IrlConfig(max_iters=200)
    a = mechanism_per_human(mdp, DemonstrationSet([demos]), WelfareAggregator(), cfg)
    b = mechanism_pooled(mdp, DemonstrationSet([demos]), cfg)
    np.testing.assert_allclose(a.state_reward, b.state_reward, atol=1e-12)
    assert np.array_equal(a.policy.probs, b.policy.probs)


def _walk(mdp, action):
    s, states = int(np.argmax(mdp.initial_dist)), []
    states.append(s)
    for _ in range(mdp.horizon - 1):
        s = int(np.argmax(mdp.transition[s, action]))
        states.append(s)
    return Trajectory(np.array(states), np.full(mdp.horizon - 1, action))


def test_utilitarian_opposite_preferences_are_symmetric():
    mdp = chain(5)
    left, right = _walk(mdp, 0), _walk(mdp, 1)
    out = mechanism_per_human(mdp, DemonstrationSet([[left], [right]]), WelfareAggregator("utilitarian"),
                              IrlConfig(max_iters=300))
    assert out.state_reward[0] == pytest.approx(out.state_reward[2], rel=1e-9)


def test_egalitarian_takes_statewise_minimum():
    mdp = chain(5)
    left, right = _walk(mdp, 0), _walk(mdp, 1)
    cfg = IrlConfig(max_iters=300)
    eager = [right]
    indifferent = [left, right]
    out = mechanism_per_human(mdp, DemonstrationSet([eager, indifferent]), WelfareAggregator("egalitarian"), cfg)
    r1 = maxent_irl(mdp, eager, cfg).reward.state_rewards(mdp)
    r2 = maxent_irl(mdp, indifferent, cfg).reward.state_rewards(mdp)
    expected = np.minimum(r1, r2)
    np.testing.assert_allclose(out.state_reward, expected, atol=1e-12)
    assert np.argmax(out.state_reward) == np.argmax(expected)
    assert not out.converged  # deterministic demos never reach the tolerance


def test_human_utility_endpoints():
    mdp = random_mdp(4, 2, 5, 2, seed=7)
    w = LinearReward([1.0, -0.5])
    a, _ = value_iteration(mdp, w)
    b = Policy.uniform(mdp)
    assert human_utility(mdp, a, b, w, 1.0) == pytest.approx(policy_value(mdp, a, w))
    assert human_utility(mdp, a, b, w, 0.0) == pytest.approx(policy_value(mdp, b, w))
    assert human_utility(mdp, b, b, w, 0.5) == pytest.approx(policy_value(mdp, b, w))
    with pytest.raises(ValueError):
        human_utility(mdp, a, b, w, 1.5)
