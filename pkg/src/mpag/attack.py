"""Adversarial demonstrations against pooled MaxEnt IRL.

The attacker maximises its own discounted return minus a penalty that pulls
the discounted feature counts of its demonstration toward a target chosen so
that the pooled average looks like an attacker-optimal agent.  The feasible
set is the occupancy polytope, so the program is solved by conditional
gradient with backward induction as the linear oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .irl import IrlConfig, MechanismOutcome, mechanism_pooled
from .mdp import (
    FiniteMdp,
    LinearReward,
    OccupancyMeasure,
    Policy,
    Trajectory,
    backward_induction,
    discounted_feature_counts,
    expected_feature_counts,
    flow_violation,
    occupancy_from_policy,
    policy_from_occupancy,
    policy_value,
    rollout,
    trajectory_return,
    value_iteration,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AttackProblem:
    mdp: FiniteMdp
    attacker_reward: LinearReward
    other_trajectory: Trajectory
    lam: float
    target: np.ndarray
    expert_policy: Policy
    expert_counts: np.ndarray

    def objective(self, occupancy: OccupancyMeasure) -> float:
        d = occupancy.state_marginals()
        r = self.attacker_reward.state_rewards(self.mdp)
        gain = float(self.mdp.discounts @ d @ r)
        miss = occupancy.feature_counts(self.mdp) - self.target
        return gain - self.lam * float(miss @ miss)

    def stage_gradient(self, occupancy: OccupancyMeasure) -> np.ndarray:
        """d objective / d rho[t, s, a]; depends on (t, s) only, returned as (T, S)."""
        r = self.attacker_reward.state_rewards(self.mdp)
        miss = occupancy.feature_counts(self.mdp) - self.target
        per_state = r - 2.0 * self.lam * (self.mdp.features @ miss)
        return self.mdp.discounts[:, None] * per_state[None, :]


@dataclass(frozen=True, eq=False)
class AttackSolution:
    occupancy: OccupancyMeasure
    objective_value: float
    best_response: Trajectory
    iterations: int
    duality_gap: float
    converged: bool
    initial_objective: float


def build_attack(mdp: FiniteMdp, attacker_reward: LinearReward, other_trajectory: Trajectory, lam: float) -> AttackProblem:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    attacker_reward.state_rewards(mdp)  # dimension check
    expert, _ = value_iteration(mdp, attacker_reward)
    e_counts = expected_feature_counts(mdp, expert)
    target = 2.0 * e_counts - discounted_feature_counts(other_trajectory, mdp)
    return AttackProblem(mdp, attacker_reward, other_trajectory, float(lam), target, expert, e_counts)


def _vertex(mdp: FiniteMdp, stage: np.ndarray) -> OccupancyMeasure:
    actions, _ = backward_induction(mdp, stage)
    return occupancy_from_policy(mdp, Policy.deterministic(actions, mdp.num_actions))


def solve_attack(problem: AttackProblem, max_iters: int = 1000, tol: float = 1e-6, step: str = "standard",
                 check_feasibility: bool = False, seed=0) -> AttackSolution:
    """Conditional gradient ascent from the attacker-optimal occupancy.

    ``step="standard"`` uses 2/(k+2); ``step="line_search"`` the exact step of
    the quadratic.  The best iterate is returned; its optimality certificate is
    the smallest Frank-Wolfe gap seen, since every gap bounds f* - f(iterate)
    and the best iterate is at least as good as each of them.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if step not in ("standard", "line_search"):
        raise ValueError(f"unknown step rule {step!r}")
    mdp = problem.mdp
    rho = occupancy_from_policy(mdp, problem.expert_policy)
    f0 = problem.objective(rho)
    best_rho, best_f = rho, f0
    best_gap = np.inf
    k = 0
    for k in range(max_iters):
        stage = problem.stage_gradient(rho)
        v = _vertex(mdp, stage)
        direction = v.rho - rho.rho
        gap = float(np.einsum("ts,tsa->", stage, direction))
        best_gap = min(best_gap, max(gap, 0.0))
        if gap <= tol:
            break
        if step == "standard":
            eta = 2.0 / (k + 2.0)
        else:
            dF = OccupancyMeasure(direction).feature_counts(mdp)
            curv = 2.0 * problem.lam * float(dF @ dF)
            eta = 1.0 if curv <= 0 else min(1.0, gap / curv)
        rho = OccupancyMeasure(rho.rho + eta * direction)
        if check_feasibility:
            assert flow_violation(mdp, rho) <= 1e-6, "iterate left the occupancy polytope"
        f = problem.objective(rho)
        if f > best_f:
            best_rho, best_f = rho, f
    else:
        k = max_iters
    converged = best_gap <= tol
    if not converged:
        log.info("attack solver stopped at %d iterations with gap %.3g", k, best_gap)
    traj = decode_trajectory(mdp, best_rho, seed)
    return AttackSolution(best_rho, best_f, traj, k, float(best_gap), converged, f0)


def decode_trajectory(mdp: FiniteMdp, occupancy: OccupancyMeasure, seed=0) -> Trajectory:
    """Greedy-argmax rollout of the policy implied by the occupancy measure.

    Under stochastic dynamics (or a spread initial distribution) the rollout is
    sampled with ``seed`` instead.
    """
    policy = policy_from_occupancy(mdp, occupancy)
    if not mdp.is_deterministic:
        greedy = Policy.deterministic(policy.greedy_actions(), mdp.num_actions)
        return rollout(mdp, greedy, seed)
    s = int(np.argmax(mdp.initial_dist))
    states, actions = [s], []
    for t in range(mdp.horizon - 1):
        a = int(np.argmax(policy.probs[t, s]))
        s = int(np.argmax(mdp.transition[s, a]))
        actions.append(a)
        states.append(s)
    return Trajectory(np.array(states), np.array(actions, dtype=int))


@dataclass(frozen=True, eq=False)
class AttackEvaluation:
    utility: float
    demo_value: float
    robot_value: float
    robot: MechanismOutcome


def attack_outcome(mdp: FiniteMdp, attacker_reward: LinearReward, other_trajectory: Trajectory,
                   candidate: Trajectory, alpha: float, irl_cfg: IrlConfig = IrlConfig(),
                   robot: MechanismOutcome | None = None) -> AttackEvaluation:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if robot is None:
        robot = mechanism_pooled(mdp, [other_trajectory, candidate], irl_cfg)
    demo = trajectory_return(candidate, mdp, attacker_reward)
    deploy = policy_value(mdp, robot.policy, attacker_reward)
    return AttackEvaluation(alpha * demo + (1 - alpha) * deploy, demo, deploy, robot)


def evaluate_attack(mdp: FiniteMdp, attacker_reward: LinearReward, other_trajectory: Trajectory,
                    candidate: Trajectory, alpha: float, irl_cfg: IrlConfig = IrlConfig()) -> float:
    """Two-phase utility of the attacker when it demonstrates ``candidate``."""
    return attack_outcome(mdp, attacker_reward, other_trajectory, candidate, alpha, irl_cfg).utility


def expert_trajectory(mdp: FiniteMdp, reward: LinearReward, seed=0) -> Trajectory:
    policy, _ = value_iteration(mdp, reward)
    return rollout(mdp, policy, seed)


def state_visits(mdp: FiniteMdp, traj: Trajectory) -> np.ndarray:
    """Undiscounted visitation count per state."""
    return np.bincount(traj.states, minlength=mdp.num_states).astype(float)
