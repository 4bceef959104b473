"""Honesty calculus for the two-phase apprenticeship game.

A mechanism here is any callable ``mechanism(mdp, demos) -> Policy`` where
``demos`` lists one demonstrated policy per human.  Human h's utility for
demonstrating pi is

    alpha * V(pi; R_h) + (1 - alpha) * V(mechanism(demos); R_h)

and best responses are found by exhaustive enumeration of deterministic
policies, so every operation is limited to tiny instances.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .irl import IrlConfig, maxent_irl_from_counts
from .mdp import (
    FiniteMdp,
    OccupancyMeasure,
    Policy,
    Reward,
    enumerate_policies,
    expected_feature_counts,
    occupancy_from_policy,
    policy_from_occupancy,
    policy_value,
    value_iteration,
)

Mechanism = Callable[[FiniteMdp, Sequence[Policy]], Policy]

MAX_STATES, MAX_ACTIONS, MAX_HORIZON = 4, 2, 4


class NoFiniteThresholdError(ValueError):
    """The best policy is not unique, so no alpha certifies it."""


@dataclass(frozen=True)
class PhaseWeights:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class PolicyValueSpectrum:
    best_value: float
    second_value: float
    worst_value: float

    def __post_init__(self):
        if not self.worst_value <= self.second_value <= self.best_value:
            raise ValueError("need worst <= second <= best")


# ------------------------------------------------------------------ mechanisms

def occupancy_average_mechanism(mdp: FiniteMdp, demos: Sequence[Policy]) -> Policy:
    """Deploy the policy of the averaged demonstrated occupancy."""
    rho = np.mean([occupancy_from_policy(mdp, p).rho for p in demos], axis=0)
    return policy_from_occupancy(mdp, OccupancyMeasure(rho))


@dataclass(frozen=True)
class PooledIrlMechanism:
    """MaxEnt IRL on the pooled expected feature counts of the demonstrated
    policies, then planning on the recovered reward."""
    cfg: IrlConfig = IrlConfig()

    def __call__(self, mdp: FiniteMdp, demos: Sequence[Policy]) -> Policy:
        target = np.mean([expected_feature_counts(mdp, p) for p in demos], axis=0)
        res = maxent_irl_from_counts(mdp, target, self.cfg)
        policy, _ = value_iteration(mdp, res.reward)
        return policy


# ------------------------------------------------------------------ helpers

def _check_size(mdp: FiniteMdp):
    if mdp.num_states > MAX_STATES or mdp.num_actions > MAX_ACTIONS or mdp.horizon > MAX_HORIZON:
        raise ValueError(f"enumeration limited to |S| <= {MAX_STATES}, |A| <= {MAX_ACTIONS}, T <= {MAX_HORIZON}")


def same_behaviour(mdp: FiniteMdp, a: Policy, b: Policy, tol: float = 1e-12) -> bool:
    """Equal occupancy measures, i.e. the policies differ only where nothing is reached."""
    return bool(np.allclose(occupancy_from_policy(mdp, a).rho, occupancy_from_policy(mdp, b).rho, rtol=0, atol=tol))


def expert_policy(mdp: FiniteMdp, reward: Reward) -> Policy:
    return value_iteration(mdp, reward)[0]


def _with(demos: Sequence[Policy], h: int, policy: Policy) -> list[Policy]:
    out = list(demos)
    out.insert(h, policy)
    return out


def _swap(demos: Sequence[Policy], h: int, policy: Policy) -> list[Policy]:
    out = list(demos)
    out[h] = policy
    return out


def phase_utilities(mdp, h, policy, others, mechanism: Mechanism, reward) -> tuple[float, float]:
    """(learning-phase, deployment-phase) utility of human h demonstrating ``policy``."""
    robot = mechanism(mdp, _with(others, h, policy))
    return policy_value(mdp, policy, reward), policy_value(mdp, robot, reward)


# ------------------------------------------------------------------ operations

def best_response(mdp: FiniteMdp, h: int, others: Sequence[Policy], mechanism: Mechanism, alpha: float,
                  reward: Reward) -> Policy:
    """Exhaustive argmax of human h's two-phase utility; first policy wins ties.

    ``others`` are the other humans' demonstrations in index order; h's
    demonstration is inserted at position h.
    """
    PhaseWeights(alpha)
    _check_size(mdp)
    best, best_u = None, -np.inf
    for pi in enumerate_policies(mdp):
        learn, deploy = phase_utilities(mdp, h, pi, others, mechanism, reward)
        u = alpha * learn + (1 - alpha) * deploy
        if u > best_u + 1e-12:
            best, best_u = pi, u
    return best


def value_spectrum(mdp: FiniteMdp, reward: Reward) -> PolicyValueSpectrum:
    """Best, runner-up and worst values over behaviour-distinct deterministic policies."""
    _check_size(mdp)
    vals = sorted((policy_value(mdp, pi, reward) for pi in enumerate_policies(mdp)), reverse=True)
    second = vals[1] if len(vals) > 1 else vals[0]
    return PolicyValueSpectrum(vals[0], second, vals[-1])


def alpha_honesty_threshold(spectrum: PolicyValueSpectrum) -> float:
    """alpha* = r / (1 + r), r = (best - worst) / (best - second).

    Above alpha* demonstrating the unique optimal policy beats any other
    demonstration whatever the mechanism does.
    """
    gap = spectrum.best_value - spectrum.second_value
    if gap <= 0:
        raise NoFiniteThresholdError("best and second values coincide")
    r = (spectrum.best_value - spectrum.worst_value) / gap
    return r / (1 + r)


def _welfare_terms(mdp, demos, mechanism, rewards) -> np.ndarray:
    robot = mechanism(mdp, demos)
    return np.array([policy_value(mdp, robot, r) for r in rewards])


def is_dishonest(mdp: FiniteMdp, h: int, candidate: Policy, experts: Sequence[Policy], mechanism: Mechanism,
                 rewards: Sequence[Reward]) -> bool:
    """Does swapping h's expert demonstration for ``candidate`` lower total deployment welfare?"""
    honest = _welfare_terms(mdp, experts, mechanism, rewards).sum()
    deviant = _welfare_terms(mdp, _swap(experts, h, candidate), mechanism, rewards).sum()
    return bool(deviant < honest - 1e-12)


def expected_externality(mdp: FiniteMdp, h: int, candidate: Policy, experts: Sequence[Policy], mechanism: Mechanism,
                         rewards: Sequence[Reward]) -> float:
    """Change in the other humans' total deployment utility caused by h's deviation."""
    honest = _welfare_terms(mdp, experts, mechanism, rewards)
    deviant = _welfare_terms(mdp, _swap(experts, h, candidate), mechanism, rewards)
    diff = np.delete(deviant - honest, h)
    return float(diff.sum())


def externality_alpha_bound(mdp: FiniteMdp, h: int, candidates: Sequence[Policy], experts: Sequence[Policy],
                            mechanism: Mechanism, rewards: Sequence[Reward]) -> float:
    """Smallest alpha at which every listed candidate is certified worse than the expert.

    Uses r = max over candidates of -Ex / (learning-phase loss) and returns
    r / (1 + r), or 0 when no candidate binds.  Candidates with no learning
    loss cannot be handled by the bound and are skipped with a warning.
    """
    r_max = 0.0
    expert_v = policy_value(mdp, experts[h], rewards[h])
    for c in candidates:
        loss = expert_v - policy_value(mdp, c, rewards[h])
        if loss <= 1e-12:
            warnings.warn("candidate has no learning-phase loss; skipped", RuntimeWarning, stacklevel=2)
            continue
        ex = expected_externality(mdp, h, c, experts, mechanism, rewards)
        r_max = max(r_max, -ex / loss)
    return r_max / (1 + r_max)


def phase_monotonicity_check(mdp: FiniteMdp, h: int, others: Sequence[Policy], mechanism: Mechanism,
                             alpha_hi: float, alpha_lo: float, reward: Reward) -> bool:
    """Raising alpha never lowers the learning-phase utility of the best response
    and never raises its deployment-phase utility."""
    if not alpha_hi > alpha_lo:
        raise ValueError("alpha_hi must exceed alpha_lo")
    hi = best_response(mdp, h, others, mechanism, alpha_hi, reward)
    lo = best_response(mdp, h, others, mechanism, alpha_lo, reward)
    learn_hi, deploy_hi = phase_utilities(mdp, h, hi, others, mechanism, reward)
    learn_lo, deploy_lo = phase_utilities(mdp, h, lo, others, mechanism, reward)
    return bool(learn_hi >= learn_lo - 1e-12 and deploy_lo >= deploy_hi - 1e-12)


# ------------------------------------------------------------------ toy instance

@dataclass(frozen=True, eq=False)
class ThresholdToy:
    mdp: FiniteMdp
    reward: np.ndarray
    expert: Policy
    second: Policy
    worst: Policy

    def mechanism(self, mdp: FiniteMdp, demos: Sequence[Policy]) -> Policy:
        """Rewards deviation: deploys the best policy for the runner-up demo,
        the worst policy for the expert demo, and copies anything else."""
        d = demos[0]
        if same_behaviour(mdp, d, self.second):
            return self.expert
        if same_behaviour(mdp, d, self.expert):
            return self.worst
        return d


def threshold_toy() -> ThresholdToy:
    """Single human, four states, two actions, three steps, no discounting.

    From s0 the four paths are worth 1 (s1 twice), 0.8 (s1 then s3), 0.3 and
    0 (through s2), so the value spectrum is (1, 0.8, 0).
    """
    P = np.zeros((4, 2, 4))
    P[0, 0, 1] = P[0, 1, 2] = 1
    P[1, 0, 1] = P[1, 1, 3] = 1
    P[2, 0, 2] = P[2, 1, 3] = 1
    P[3, :, 3] = 1
    mdp = FiniteMdp(P, np.eye(4)[0], np.eye(4), horizon=3, discount=1.0)
    reward = np.array([0.0, 0.5, 0.0, 0.3])

    def plan(a0, a1):
        acts = np.zeros((3, 4), dtype=int)
        acts[0, 0] = a0
        acts[1, [1, 2]] = a1
        return Policy.deterministic(acts, 2)

    return ThresholdToy(mdp, reward, plan(0, 0), plan(0, 1), plan(1, 0))
