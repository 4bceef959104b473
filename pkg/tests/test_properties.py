import numpy as np
from hypothesis import given, settings, strategies as st

from mpag.attack import build_attack, solve_attack
from mpag.bandit import (
    BanditProfile,
    boltzmann_probabilities,
    make_trace,
    regret,
    regret_curve,
    truthfulness,
    truthfulness_threshold,
)
from mpag.incentives import expected_externality, expert_policy, occupancy_average_mechanism
from mpag.irl import DemonstrationSet, IrlConfig, mechanism_pooled, soft_value_iteration
from mpag.manipulability import classify_batch, sample_batch
from mpag.mdp import (
    LinearReward,
    Policy,
    enumerate_policies,
    flow_violation,
    occupancy_from_policy,
    policy_value,
    random_mdp,
    rollout,
    value_iteration,
)
from mpag.mechanisms import (
    EfficientOrdinalMechanism,
    batch_distortion,
    plurality_distribution,
    plurality_outcome,
    sample_profiles,
)

seeds = st.integers(0, 2**32 - 1)
FAST = settings(max_examples=40, deadline=None)


@st.composite
def small_mdps(draw, max_states=5, max_actions=3, max_horizon=6):
    S = draw(st.integers(1, max_states))
    A = draw(st.integers(1, max_actions))
    T = draw(st.integers(1, max_horizon))
    d = draw(st.integers(1, 3))
    gamma = draw(st.floats(0.5, 1.0))
    return random_mdp(S, A, T, d, seed=draw(seeds), discount=gamma,
                      deterministic=draw(st.booleans()))


@st.composite
def profiles(draw, max_humans=4, max_arms=6):
    N = draw(st.integers(1, max_humans))
    M = draw(st.integers(2, max_arms))
    rng = np.random.default_rng(draw(seeds))
    return BanditProfile(rng.dirichlet(np.ones(M), size=N))


def random_policy(mdp, seed):
    rng = np.random.default_rng(seed)
    return Policy(rng.dirichlet(np.ones(mdp.num_actions), size=(mdp.horizon, mdp.num_states)))


# ---------------------------------------------------------------- MDP core

@FAST
@given(small_mdps(), seeds)
def test_occupancy_flow_and_normalization(mdp, seed):
    occ = occupancy_from_policy(mdp, random_policy(mdp, seed))
    assert flow_violation(mdp, occ) <= 1e-6
    np.testing.assert_allclose(occ.rho.sum(axis=(1, 2)), 1.0, atol=1e-9)
    assert np.all(occ.rho >= 0)


@FAST
@given(small_mdps(), seeds)
def test_value_equals_occupancy_inner_product(mdp, seed):
    w = LinearReward(np.random.default_rng(seed).normal(size=mdp.features.shape[1]))
    pi = random_policy(mdp, seed)
    rho = occupancy_from_policy(mdp, pi).rho
    lin = float(np.einsum("t,tsa,s->", mdp.discounts, rho, w.state_rewards(mdp)))
    assert abs(policy_value(mdp, pi, w) - lin) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(small_mdps(max_states=3, max_actions=2, max_horizon=4), seeds)
def test_backward_induction_matches_enumeration(mdp, seed):
    w = LinearReward(np.random.default_rng(seed).normal(size=mdp.features.shape[1]))
    _, v = value_iteration(mdp, w)
    assert abs(v - max(policy_value(mdp, p, w) for p in enumerate_policies(mdp))) <= 1e-12


@FAST
@given(small_mdps(), seeds)
def test_rollout_is_feasible_path(mdp, seed):
    tr = rollout(mdp, random_policy(mdp, seed), seed)
    assert len(tr) == mdp.horizon
    assert mdp.initial_dist[tr.states[0]] > 0
    for t, (s, a) in enumerate(tr.steps):
        assert mdp.transition[s, a, tr.states[t + 1]] > 0


# ---------------------------------------------------------------- IRL

@FAST
@given(small_mdps(), seeds, st.floats(-50, 50))
def test_soft_policy_normalized_and_shift_invariant(mdp, seed, c):
    r = np.random.default_rng(seed).normal(size=mdp.num_states) * 3
    a = soft_value_iteration(mdp, r).probs
    np.testing.assert_allclose(a.sum(axis=2), 1.0, atol=1e-12)
    assert np.max(np.abs(a - soft_value_iteration(mdp, r + c).probs)) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(1, 3))
def test_pooling_invariance(seed, n_demos, n_humans):
    mdp = random_mdp(4, 2, 5, 2, seed=seed)
    rng = np.random.default_rng(seed)
    demos = [rollout(mdp, Policy.uniform(mdp), rng) for _ in range(n_demos)]
    cfg = IrlConfig(max_iters=40)
    cut = np.sort(rng.integers(0, n_demos + 1, size=n_humans - 1))
    groups = [list(g) for g in np.split(np.array(demos, dtype=object), cut)]
    a = mechanism_pooled(mdp, DemonstrationSet([demos]), cfg)
    b = mechanism_pooled(mdp, DemonstrationSet([g for g in groups if g] or [demos]), cfg)
    np.testing.assert_allclose(a.state_reward, b.state_reward, atol=1e-12)


# ---------------------------------------------------------------- attack

@settings(max_examples=15, deadline=None)
@given(seeds, st.floats(0, 20), st.sampled_from(["standard", "line_search"]))
def test_solver_iterates_stay_feasible(seed, lam, step):
    mdp = random_mdp(4, 2, 5, 2, seed=seed)
    w = LinearReward(np.random.default_rng(seed).normal(size=2))
    other = rollout(mdp, Policy.uniform(mdp), seed)
    sol = solve_attack(build_attack(mdp, w, other, lam), max_iters=30, step=step, check_feasibility=True)
    assert flow_violation(mdp, sol.occupancy) <= 1e-6
    assert sol.objective_value >= sol.initial_objective - 1e-12
    assert sol.duality_gap >= -1e-12


# ---------------------------------------------------------------- bandit

@FAST
@given(st.lists(st.floats(0, 1), min_size=2, max_size=8), st.floats(0, 1e6))
def test_boltzmann_is_a_distribution(row, beta):
    p = boltzmann_probabilities(row, beta)
    assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12


@FAST
@given(profiles(), seeds, st.integers(1, 60))
def test_regret_and_truthfulness_ranges(prof, seed, n):
    rng = np.random.default_rng(seed)
    N, M = prof.num_humans, prof.num_arms
    tr = make_trace(rng.integers(0, N + 1, size=n), rng.integers(0, M, size=n), prof)
    np.testing.assert_array_equal(tr.welfare, prof.utilities[:, tr.arms].mean(axis=0))
    assert regret(tr, prof) >= 0
    assert np.all(np.diff(regret_curve(tr, prof)) >= 0)
    perm = rng.permutation(n)
    shuffled = make_trace(tr.choosers[perm], tr.arms[perm], prof)
    assert abs(regret(shuffled, prof) - regret(tr, prof)) <= 1e-9
    for h in np.unique(tr.choosers[tr.choosers < N]):
        assert 0.0 <= truthfulness(tr, prof, int(h)) <= 1.0


@FAST
@given(profiles(max_humans=1), st.floats(0.05, 0.9), st.floats(0.01, 0.09))
def test_threshold_monotone_in_gamma(prof, g, dg):
    row = prof.utilities[0]
    if np.all(row == row.max()):
        return
    assert truthfulness_threshold(row, g) <= truthfulness_threshold(row, g + dg)


# ---------------------------------------------------------------- social choice

@FAST
@given(st.lists(st.integers(0, 4), min_size=1, max_size=9), seeds)
def test_plurality_anonymity_and_neutrality(votes, seed):
    rng = np.random.default_rng(seed)
    votes = np.array(votes)
    p = plurality_distribution(votes, 5)
    assert abs(p.sum() - 1) <= 1e-12
    assert np.array_equal(plurality_distribution(rng.permutation(votes), 5), p)
    assert plurality_outcome(rng.permutation(votes), 5) == plurality_outcome(votes, 5)
    sigma = rng.permutation(5)
    q = plurality_distribution(sigma[votes], 5)
    np.testing.assert_array_equal(q[sigma], p)


@FAST
@given(st.integers(1, 4), st.integers(2, 8), seeds)
def test_distortion_at_least_one(N, M, seed):
    U = sample_profiles(np.random.default_rng(seed), 50, N, M)
    np.testing.assert_allclose(U.sum(axis=2), 1.0, atol=1e-12)
    for basis in ("full", "committed"):
        assert np.all(batch_distortion(U, EfficientOrdinalMechanism(), basis) >= 1 - 1e-12)


@FAST
@given(seeds)
def test_demo_manipulable_implies_announce_manipulable(seed):
    U = sample_batch(np.random.default_rng(seed), 500)
    np.testing.assert_allclose(U.sum(axis=2), 1.0, atol=1e-12)
    ann, dem = classify_batch(U)
    assert not np.any(dem & ~ann)


# ---------------------------------------------------------------- incentives

@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 3))
def test_expert_externality_is_zero(seed, n):
    mdp = random_mdp(3, 2, 4, 2, seed=seed)
    rng = np.random.default_rng(seed)
    rewards = [rng.normal(size=3) for _ in range(n)]
    experts = [expert_policy(mdp, r) for r in rewards]
    for h in range(n):
        assert expected_externality(mdp, h, experts[h], experts, occupancy_average_mechanism, rewards) == 0.0
