"""Finite-horizon MDP engine: dynamics, planning, rollouts and occupancy measures.

Time runs over ``t = 0 .. T-1`` where ``T`` is the horizon; a trajectory visits
``T`` states and takes ``T - 1`` actions.  Policies and occupancy measures carry
an action layer for the final step too, which never influences anything.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence, Union

import numpy as np

TIE_TOL = 1e-12
FLOW_TOL = 1e-6


def seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, None or an existing SeedSequence."""
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _frozen(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    transition: np.ndarray  # P[s, a, s']
    initial_dist: np.ndarray
    features: np.ndarray  # phi[s, :]
    horizon: int
    discount: float = 1.0

    def __post_init__(self):
        P = _frozen(self.transition)
        mu0 = _frozen(self.initial_dist)
        phi = _frozen(self.features)
        if phi.ndim == 1:
            phi = _frozen(phi[:, None])
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "initial_dist", mu0)
        object.__setattr__(self, "features", phi)

        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"transition must have shape (S, A, S), got {P.shape}")
        if np.any(P < 0) or not np.allclose(P.sum(axis=2), 1.0, rtol=0, atol=1e-9):
            raise ValueError("every P[s, a, :] must be a probability vector")
        if mu0.shape != (P.shape[0],):
            raise ValueError("initial_dist must have one entry per state")
        if np.any(mu0 < 0) or abs(mu0.sum() - 1.0) > 1e-9:
            raise ValueError("initial_dist must be a probability vector")
        if phi.shape[0] != P.shape[0] or phi.shape[1] < 1:
            raise ValueError("features must have shape (S, d) with d >= 1")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be a positive integer")
        object.__setattr__(self, "horizon", int(self.horizon))
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @cached_property
    def discounts(self) -> np.ndarray:
        """gamma**t for t = 0 .. T-1."""
        return _frozen(self.discount ** np.arange(self.horizon))

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(self.transition.max(axis=2) == 1.0) and self.initial_dist.max() == 1.0)


@dataclass(frozen=True, eq=False)
class LinearReward:
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.atleast_1d(self.weights)))

    def state_rewards(self, mdp: FiniteMdp) -> np.ndarray:
        if self.weights.shape != (mdp.feature_dim,):
            raise ValueError(
                f"reward dimension {self.weights.shape[0]} does not match feature dimension {mdp.feature_dim}"
            )
        return mdp.features @ self.weights


Reward = Union[LinearReward, np.ndarray]


def state_rewards(mdp: FiniteMdp, reward: Reward) -> np.ndarray:
    """Per-state reward vector for either a LinearReward or a raw (S,) array."""
    if isinstance(reward, LinearReward):
        return reward.state_rewards(mdp)
    r = np.asarray(reward, dtype=float)
    if r.shape != (mdp.num_states,):
        raise ValueError(f"state reward must have shape ({mdp.num_states},), got {r.shape}")
    return r


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray  # length T
    actions: np.ndarray  # length T - 1

    def __post_init__(self):
        s = _frozen(self.states, dtype=int)
        a = _frozen(self.actions, dtype=int)
        if s.ndim != 1 or a.ndim != 1 or len(s) != len(a) + 1:
            raise ValueError("a trajectory has T states and T-1 actions")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "actions", a)

    @property
    def steps(self) -> list[tuple[int, int]]:
        return list(zip(self.states[:-1].tolist(), self.actions.tolist()))

    @property
    def final_state(self) -> int:
        return int(self.states[-1])

    def __len__(self):
        return len(self.states)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.states, other.states) and np.array_equal(self.actions, other.actions)

    def __hash__(self):
        return hash((self.states.tobytes(), self.actions.tobytes()))


@dataclass(frozen=True, eq=False)
class Policy:
    probs: np.ndarray  # pi[t, s, a]

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 3:
            raise ValueError("policy probabilities must have shape (T, S, A)")
        if np.any(p < -1e-12) or not np.allclose(p.sum(axis=2), 1.0, atol=1e-9):
            raise ValueError("each pi_t(.|s) must be a probability vector")
        object.__setattr__(self, "probs", p)

    @classmethod
    def deterministic(cls, actions: np.ndarray, num_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        return cls(np.eye(num_actions)[actions])

    @classmethod
    def uniform(cls, mdp: FiniteMdp) -> "Policy":
        return cls(np.full((mdp.horizon, mdp.num_states, mdp.num_actions), 1.0 / mdp.num_actions))

    @property
    def horizon(self) -> int:
        return self.probs.shape[0]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(self.probs.max(axis=2) == 1.0))

    def greedy_actions(self) -> np.ndarray:
        return self.probs.argmax(axis=2)


@dataclass(frozen=True, eq=False)
class OccupancyMeasure:
    rho: np.ndarray  # rho[t, s, a]

    def __post_init__(self):
        object.__setattr__(self, "rho", _frozen(self.rho))

    def state_marginals(self) -> np.ndarray:
        return self.rho.sum(axis=2)

    def feature_counts(self, mdp: FiniteMdp) -> np.ndarray:
        """Discounted feature counts sum_t gamma^t sum_{s,a} rho phi(s)."""
        return mdp.discounts @ self.state_marginals() @ mdp.features


@dataclass(frozen=True)
class WelfareAggregator:
    kind: str = "utilitarian"

    def __post_init__(self):
        if self.kind not in ("utilitarian", "egalitarian"):
            raise ValueError(f"unknown welfare aggregator {self.kind!r}")

    def __call__(self, rewards: Sequence[np.ndarray]) -> np.ndarray:
        stacked = np.asarray(rewards, dtype=float)
        if self.kind == "utilitarian":
            return stacked.sum(axis=0)
        return stacked.min(axis=0)


def _check_policy(mdp: FiniteMdp, policy: Policy):
    if policy.probs.shape != (mdp.horizon, mdp.num_states, mdp.num_actions):
        raise ValueError(
            f"policy shape {policy.probs.shape} does not match the MDP "
            f"({mdp.horizon}, {mdp.num_states}, {mdp.num_actions})"
        )


def _argmax_lowest(q: np.ndarray) -> np.ndarray:
    return np.argmax(q >= q.max(axis=-1, keepdims=True) - TIE_TOL, axis=-1)


def backward_induction(mdp: FiniteMdp, stage_rewards: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximise sum_t stage_rewards[t, s_t]; returns (greedy actions (T, S), V (T, S)).

    ``stage_rewards`` already contains any discounting.
    """
    T, S = mdp.horizon, mdp.num_states
    V = np.zeros((T, S))
    actions = np.zeros((T, S), dtype=int)
    V[-1] = stage_rewards[-1]
    for t in range(T - 2, -1, -1):
        Q = stage_rewards[t][:, None] + mdp.transition @ V[t + 1]
        actions[t] = _argmax_lowest(Q)
        V[t] = Q[np.arange(S), actions[t]]
    return actions, V


def value_iteration(mdp: FiniteMdp, reward: Reward) -> tuple[Policy, float]:
    """Optimal deterministic nonstationary policy and its expected discounted return."""
    r = state_rewards(mdp, reward)
    actions, V = backward_induction(mdp, mdp.discounts[:, None] * r[None, :])
    return Policy.deterministic(actions, mdp.num_actions), float(mdp.initial_dist @ V[0])


def propagate(mdp: FiniteMdp, probs: np.ndarray) -> np.ndarray:
    """Forward state distributions for a raw (T, S, A) policy array."""
    S, A = mdp.num_states, mdp.num_actions
    flat_P = mdp.transition.reshape(S * A, S)
    d = np.zeros((mdp.horizon, S))
    d[0] = mdp.initial_dist
    for t in range(mdp.horizon - 1):
        d[t + 1] = (d[t][:, None] * probs[t]).reshape(-1) @ flat_P
    return d


def state_distributions(mdp: FiniteMdp, policy: Policy) -> np.ndarray:
    """d_t(s) for t = 0 .. T-1 by forward propagation."""
    _check_policy(mdp, policy)
    return propagate(mdp, policy.probs)


def expected_feature_counts(mdp: FiniteMdp, policy: Policy) -> np.ndarray:
    return mdp.discounts @ state_distributions(mdp, policy) @ mdp.features


def policy_value(mdp: FiniteMdp, policy: Policy, reward: Reward) -> float:
    r = state_rewards(mdp, reward)
    return float(mdp.discounts @ state_distributions(mdp, policy) @ r)


def discounted_feature_counts(traj: Trajectory, mdp: FiniteMdp) -> np.ndarray:
    if len(traj) != mdp.horizon:
        raise ValueError(f"trajectory visits {len(traj)} states, horizon is {mdp.horizon}")
    if traj.states.min() < 0 or traj.states.max() >= mdp.num_states:
        raise ValueError("trajectory contains out-of-range states")
    return mdp.discounts @ mdp.features[traj.states]


def trajectory_return(traj: Trajectory, mdp: FiniteMdp, reward: Reward) -> float:
    r = state_rewards(mdp, reward)
    return float(mdp.discounts @ r[traj.states])


def _sample(p: np.ndarray, rng: np.random.Generator) -> int:
    idx = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
    return min(idx, len(p) - 1)


def rollout(mdp: FiniteMdp, policy: Policy, seed=None) -> Trajectory:
    _check_policy(mdp, policy)
    rng = np.random.default_rng(seed)
    states = [_sample(mdp.initial_dist, rng)]
    actions = []
    for t in range(mdp.horizon - 1):
        s = states[-1]
        a = _sample(policy.probs[t, s], rng)
        actions.append(a)
        states.append(_sample(mdp.transition[s, a], rng))
    return Trajectory(np.array(states), np.array(actions, dtype=int))


def occupancy_from_policy(mdp: FiniteMdp, policy: Policy) -> OccupancyMeasure:
    d = state_distributions(mdp, policy)
    return OccupancyMeasure(d[:, :, None] * policy.probs)


def policy_from_occupancy(mdp: FiniteMdp, occupancy: OccupancyMeasure) -> Policy:
    rho = occupancy.rho
    mass = rho.sum(axis=2, keepdims=True)
    uniform = np.full_like(rho, 1.0 / mdp.num_actions)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(mass > 1e-12, rho / np.where(mass > 1e-12, mass, 1.0), uniform)
    return Policy(np.clip(probs, 0.0, None) / probs.sum(axis=2, keepdims=True))


def occupancy_of_trajectory(mdp: FiniteMdp, traj: Trajectory) -> OccupancyMeasure:
    """Indicator occupancy of a single trajectory (final action set to 0)."""
    rho = np.zeros((mdp.horizon, mdp.num_states, mdp.num_actions))
    acts = np.append(traj.actions, 0)
    rho[np.arange(mdp.horizon), traj.states, acts] = 1.0
    return OccupancyMeasure(rho)


def policy_of_trajectory(mdp: FiniteMdp, traj: Trajectory) -> Policy:
    """Deterministic policy taking the trajectory's action at (t, s_t); action 0 elsewhere.

    Under deterministic dynamics and a point-mass start it reproduces the trajectory.
    """
    acts = np.zeros((mdp.horizon, mdp.num_states), dtype=int)
    acts[np.arange(mdp.horizon - 1), traj.states[:-1]] = traj.actions
    return Policy.deterministic(acts, mdp.num_actions)


def flow_violation(mdp: FiniteMdp, occupancy: OccupancyMeasure) -> float:
    """Largest absolute violation of the occupancy-polytope constraints (negativity included)."""
    rho = occupancy.rho
    marg = rho.sum(axis=2)
    inflow = np.einsum("tsa,sap->tp", rho[:-1], mdp.transition)
    worst = max(
        float(np.abs(marg[0] - mdp.initial_dist).max()),
        float(np.abs(marg[1:] - inflow).max()) if mdp.horizon > 1 else 0.0,
    )
    return max(worst, float(max(0.0, -rho.min())))


def enumerate_policies(mdp: FiniteMdp, max_policies: int = 200_000) -> Iterator[Policy]:
    """Deterministic nonstationary policies, one per distinct behaviour.

    Actions are only enumerated at (t, s) pairs reachable under the prefix
    already fixed; unreachable pairs and the final layer get action 0.  The
    result is in lexicographic order of the chosen actions.
    """
    T, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    count = 0

    def extend(t: int, table: np.ndarray, support: np.ndarray):
        nonlocal count
        if t == T - 1:
            count += 1
            if count > max_policies:
                raise ValueError(f"more than {max_policies} policies; instance too large to enumerate")
            yield Policy.deterministic(table.copy(), A)
            return
        reach = np.flatnonzero(support)
        for choice in itertools.product(range(A), repeat=len(reach)):
            table[t] = 0
            table[t, reach] = choice
            nxt = mdp.transition[reach, list(choice)].sum(axis=0) > 0
            yield from extend(t + 1, table, nxt)
        table[t] = 0

    yield from extend(0, np.zeros((T, S), dtype=int), mdp.initial_dist > 0)


# ---------------------------------------------------------------- builders

GRID_MOVES = {0: (-1, 0), 1: (1, 0), 2: (0, -1), 3: (0, 1)}  # up, down, left, right


def gridworld(
    rows: int,
    cols: int,
    regions: Sequence[Sequence[Sequence[int]]],
    horizon: int,
    discount: float = 0.95,
    start: tuple[int, int] | None = None,
) -> FiniteMdp:
    """Deterministic 4-action gridworld with one-hot region features.

    ``regions[k]`` lists the (row, col) cells carrying feature k; cells outside
    every region have the zero feature vector.  Moves off the grid leave the
    agent in place.  The default start is the bottom-left corner.
    """
    S = rows * cols
    if start is None:
        start = (rows - 1, 0)
    P = np.zeros((S, 4, S))
    for r, c in itertools.product(range(rows), range(cols)):
        for a, (dr, dc) in GRID_MOVES.items():
            nr, nc = r + dr, c + dc
            if not (0 <= nr < rows and 0 <= nc < cols):
                nr, nc = r, c
            P[r * cols + c, a, nr * cols + nc] = 1.0
    phi = np.zeros((S, len(regions)))
    for k, cells in enumerate(regions):
        for r, c in cells:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValueError(f"region cell {(r, c)} outside the {rows}x{cols} grid")
            if phi[r * cols + c].any():
                raise ValueError(f"cell {(r, c)} belongs to more than one region")
            phi[r * cols + c, k] = 1.0
    mu0 = np.zeros(S)
    mu0[start[0] * cols + start[1]] = 1.0
    return FiniteMdp(P, mu0, phi, horizon, discount)


def random_mdp(num_states: int, num_actions: int, horizon: int, feature_dim: int, seed=None,
               discount: float = 0.9, deterministic: bool = False) -> FiniteMdp:
    rng = np.random.default_rng(seed)
    if deterministic:
        nxt = rng.integers(num_states, size=(num_states, num_actions))
        P = np.eye(num_states)[nxt]
    else:
        P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    mu0 = rng.dirichlet(np.ones(num_states))
    phi = rng.random((num_states, feature_dim))
    return FiniteMdp(P, mu0, phi, horizon, discount)


def grid_heatmap(mdp_rows: int, mdp_cols: int, state_visits: np.ndarray) -> np.ndarray:
    """Reshape a per-state vector into the (rows, cols) grid layout."""
    return np.asarray(state_visits, dtype=float).reshape(mdp_rows, mdp_cols)
