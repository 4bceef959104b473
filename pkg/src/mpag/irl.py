"""Maximum-entropy IRL and the reward-aggregating mechanisms built on it."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mdp import (
    FiniteMdp,
    LinearReward,
    Policy,
    Reward,
    Trajectory,
    WelfareAggregator,
    discounted_feature_counts,
    expected_feature_counts,
    policy_value,
    propagate,
    state_rewards,
    value_iteration,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IrlConfig:
    learning_rate: float = 0.1
    max_iters: int = 2000
    grad_tolerance: float = 1e-5
    weight_init: np.ndarray | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tolerance <= 0:
            raise ValueError("grad_tolerance must be positive")


@dataclass(frozen=True)
class DemonstrationSet:
    per_human: tuple[tuple[Trajectory, ...], ...]

    def __init__(self, per_human: Sequence[Sequence[Trajectory]]):
        groups = tuple(tuple(g) for g in per_human)
        if sum(len(g) for g in groups) == 0:
            raise ValueError("a demonstration set needs at least one trajectory")
        lengths = {len(tr) for g in groups for tr in g}
        if len(lengths) > 1:
            raise ValueError("all trajectories must share the same horizon")
        object.__setattr__(self, "per_human", groups)

    @property
    def num_humans(self) -> int:
        return len(self.per_human)

    def pooled(self) -> list[Trajectory]:
        return [tr for g in self.per_human for tr in g]


@dataclass(frozen=True)
class IrlResult:
    reward: LinearReward
    converged: bool
    iterations: int
    grad_norm: float


@dataclass(frozen=True)
class MechanismOutcome:
    policy: Policy
    state_reward: np.ndarray
    converged: bool
    irl: tuple[IrlResult, ...] = field(default=())


def soft_q_values(mdp: FiniteMdp, reward: Reward) -> tuple[np.ndarray, np.ndarray]:
    """Soft Bellman backup with stage rewards gamma^t r(s).

    Returns Q (T-1, S, A) and V (T, S).  The final state has no choice to make,
    so V_{T-1} = gamma^{T-1} r.
    """
    r = state_rewards(mdp, reward)
    stage = mdp.discounts[:, None] * r[None, :]
    T, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    V = np.zeros((T, S))
    Q = np.zeros((max(T - 1, 0), S, A))
    V[-1] = stage[-1]
    for t in range(T - 2, -1, -1):
        q = stage[t][:, None] + mdp.transition @ V[t + 1]
        m = q.max(axis=1)
        Q[t] = q
        V[t] = m + np.log(np.exp(q - m[:, None]).sum(axis=1))
    return Q, V


def _soft_probs(mdp: FiniteMdp, reward: Reward) -> np.ndarray:
    Q, V = soft_q_values(mdp, reward)
    probs = np.full((mdp.horizon, mdp.num_states, mdp.num_actions), 1.0 / mdp.num_actions)
    if mdp.horizon > 1:
        probs[:-1] = np.exp(Q - V[:-1, :, None])
        probs[:-1] /= probs[:-1].sum(axis=2, keepdims=True)
    return probs


def soft_value_iteration(mdp: FiniteMdp, reward: Reward) -> Policy:
    """Boltzmann-rational nonstationary policy pi_t(a|s) = exp(Q_t(s,a) - V_t(s))."""
    return Policy(_soft_probs(mdp, reward))


def _soft_counts(mdp: FiniteMdp, w: np.ndarray) -> np.ndarray:
    probs = _soft_probs(mdp, mdp.features @ w)
    return mdp.discounts @ propagate(mdp, probs) @ mdp.features


def empirical_feature_counts(mdp: FiniteMdp, trajectories: Sequence[Trajectory]) -> np.ndarray:
    return np.mean([discounted_feature_counts(tr, mdp) for tr in trajectories], axis=0)


def log_likelihood(mdp: FiniteMdp, trajectories: Sequence[Trajectory], reward: Reward) -> float:
    """Mean log-probability of the demonstrated actions under the soft policy."""
    Q, V = soft_q_values(mdp, reward)
    total = 0.0
    for tr in trajectories:
        t = np.arange(len(tr.actions))
        s = tr.states[:-1]
        total += float(np.sum(Q[t, s, tr.actions] - V[t, s]))
    return total / len(trajectories)


def log_likelihood_gradient(mdp: FiniteMdp, trajectories: Sequence[Trajectory], reward: LinearReward) -> np.ndarray:
    return empirical_feature_counts(mdp, trajectories) - expected_feature_counts(
        mdp, soft_value_iteration(mdp, reward)
    )


def maxent_irl_from_counts(mdp: FiniteMdp, target_counts: np.ndarray, cfg: IrlConfig = IrlConfig()) -> IrlResult:
    """Gradient ascent on omega until the soft policy matches ``target_counts``."""
    target = np.asarray(target_counts, dtype=float)
    if target.shape != (mdp.feature_dim,):
        raise ValueError("target feature counts do not match the feature dimension")
    w = np.zeros(mdp.feature_dim) if cfg.weight_init is None else np.array(cfg.weight_init, dtype=float)
    if w.shape != target.shape:
        raise ValueError("weight_init does not match the feature dimension")
    grad_norm = np.inf
    for it in range(cfg.max_iters):
        grad = target - _soft_counts(mdp, w)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= cfg.grad_tolerance:
            return IrlResult(LinearReward(w), True, it, grad_norm)
        w = w + cfg.learning_rate * grad
    grad = target - _soft_counts(mdp, w)
    grad_norm = float(np.linalg.norm(grad))
    converged = grad_norm <= cfg.grad_tolerance
    if not converged:
        log.info("MaxEnt IRL hit the iteration cap (grad norm %.3g)", grad_norm)
    return IrlResult(LinearReward(w), converged, cfg.max_iters, grad_norm)


def maxent_irl(mdp: FiniteMdp, demos: DemonstrationSet | Sequence[Trajectory], cfg: IrlConfig = IrlConfig()) -> IrlResult:
    """MaxEnt IRL on the pooled trajectories of every human."""
    trajs = demos.pooled() if isinstance(demos, DemonstrationSet) else list(demos)
    if not trajs:
        raise ValueError("no demonstrations")
    return maxent_irl_from_counts(mdp, empirical_feature_counts(mdp, trajs), cfg)


def mechanism_pooled(mdp: FiniteMdp, demos: DemonstrationSet | Sequence[Trajectory], cfg: IrlConfig = IrlConfig()) -> MechanismOutcome:
    res = maxent_irl(mdp, demos, cfg)
    r = res.reward.state_rewards(mdp)
    policy, _ = value_iteration(mdp, r)
    return MechanismOutcome(policy, r, res.converged, (res,))


def mechanism_per_human(mdp: FiniteMdp, demos: DemonstrationSet, aggregator: WelfareAggregator = WelfareAggregator(),
                        cfg: IrlConfig = IrlConfig()) -> MechanismOutcome:
    """IRL per human, aggregate the recovered state rewards with W, then plan."""
    if any(len(g) == 0 for g in demos.per_human):
        raise ValueError("every human needs at least one trajectory")
    results = tuple(maxent_irl(mdp, list(g), cfg) for g in demos.per_human)
    r = aggregator([res.reward.state_rewards(mdp) for res in results])
    policy, _ = value_iteration(mdp, r)
    return MechanismOutcome(policy, r, all(res.converged for res in results), results)


def human_utility(mdp: FiniteMdp, demo_policy: Policy, robot_policy: Policy, reward: Reward, alpha: float) -> float:
    """alpha * V(demo) + (1 - alpha) * V(robot) under the human's own reward."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return alpha * policy_value(mdp, demo_policy, reward) + (1 - alpha) * policy_value(mdp, robot_policy, reward)
