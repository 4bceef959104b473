"""The multi-principal bandit apprentice game.

Humans and arms are 0-indexed.  In a :class:`GameTrace` the chooser index
``N`` (one past the last human) means the robot pulled the arm itself.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np


class NeverChosenError(ValueError):
    """The human never held control, so truthfulness is undefined."""


class NoSuboptimalArmError(ValueError):
    """Every arm is a best arm; the dominance threshold does not exist."""


@dataclass(frozen=True, eq=False)
class BanditProfile:
    utilities: np.ndarray  # (N, M), row h = R*_h

    def __post_init__(self):
        u = np.array(self.utilities, dtype=float)
        if u.ndim != 2:
            raise ValueError("utilities must be an N x M matrix")
        if u.shape[0] < 1 or u.shape[1] < 2:
            raise ValueError("need N >= 1 humans and M >= 2 arms")
        if np.any(u < 0) or np.any(u > 1):
            raise ValueError("utilities must lie in [0, 1]")
        if not np.allclose(u.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("every human's utilities must sum to 1")
        u.setflags(write=False)
        object.__setattr__(self, "utilities", u)

    @property
    def num_humans(self) -> int:
        return self.utilities.shape[0]

    @property
    def num_arms(self) -> int:
        return self.utilities.shape[1]

    @property
    def welfare(self) -> np.ndarray:
        """w_a = (1/N) sum_h R*_h(a)."""
        return self.utilities.mean(axis=0)

    @property
    def best_welfare(self) -> float:
        return float(self.welfare.max())

    def best_arms(self, h: int) -> np.ndarray:
        row = self.utilities[h]
        return np.flatnonzero(row == row.max())


@dataclass(frozen=True, eq=False)
class GameTrace:
    choosers: np.ndarray
    arms: np.ndarray
    welfare: np.ndarray
    num_humans: int

    def __len__(self):
        return len(self.arms)

    @property
    def robot(self) -> int:
        return self.num_humans

    def rounds(self):
        return list(zip(self.choosers.tolist(), self.arms.tolist(), self.welfare.tolist()))


def make_trace(choosers, arms, profile: BanditProfile) -> GameTrace:
    arms = np.asarray(arms, dtype=int)
    return GameTrace(np.asarray(choosers, dtype=int), arms, profile.welfare[arms], profile.num_humans)


# ------------------------------------------------------------------ humans

def boltzmann_probabilities(row: np.ndarray, beta: float) -> np.ndarray:
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    z = beta * (np.asarray(row, dtype=float) - np.max(row))
    p = np.exp(z)
    return p / p.sum()


def boltzmann_choice(row: np.ndarray, beta: float, seed=None) -> int:
    """Sample an arm with probability proportional to exp(beta * u(a))."""
    rng = np.random.default_rng(seed)
    p = boltzmann_probabilities(row, beta)
    return int(min(np.searchsorted(np.cumsum(p), rng.random(), side="right"), len(p) - 1))


@dataclass(frozen=True)
class Boltzmann:
    beta: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    def choose(self, row, own_history, rng) -> int:
        return boltzmann_choice(row, self.beta, rng)


@dataclass(frozen=True)
class FixedArm:
    arm: int

    def choose(self, row, own_history, rng) -> int:
        return self.arm


@dataclass(frozen=True)
class ArmSequence:
    """Open-loop strategy: the k-th time the human is asked, play ``arms[k]``."""
    arms: tuple[int, ...]

    def choose(self, row, own_history, rng) -> int:
        k = len(own_history)
        if k >= len(self.arms):
            raise ValueError(f"arm sequence of length {len(self.arms)} exhausted")
        return int(self.arms[k])


@dataclass(frozen=True)
class OrdinalRevealing:
    """Plays its not-yet-played arms from best to worst (lowest index on ties)."""

    def choose(self, row, own_history, rng) -> int:
        order = np.argsort(-np.asarray(row), kind="stable")
        seen = set(own_history)
        for a in order:
            if int(a) not in seen:
                return int(a)
        return int(order[0])


# ------------------------------------------------------------------ robots

def modal_arm(counts: np.ndarray) -> int:
    """argmax of the counts, lowest index on ties."""
    return int(np.argmax(np.asarray(counts)))


@dataclass(frozen=True)
class ExploreThenCommit:
    """Round-robin over humans for ``rounds_per_human`` rounds each, then pull
    the arm demonstrated most often overall."""
    rounds_per_human: int

    def __post_init__(self):
        if self.rounds_per_human < 1:
            raise ValueError("rounds_per_human must be positive")

    def exploration_rounds(self, num_humans: int) -> int:
        return num_humans * self.rounds_per_human

    def chooser(self, t: int, num_humans: int) -> int:
        return t % num_humans if t < self.exploration_rounds(num_humans) else num_humans

    def commit(self, human_arms: list[list[int]], num_arms: int, rng) -> int:
        counts = np.zeros(num_arms, dtype=int)
        for arms in human_arms:
            np.add.at(counts, arms, 1)
        return modal_arm(counts)


@dataclass(frozen=True)
class PluralitySharedControl(ExploreThenCommit):
    """Commit to the plurality winner among each human's modal arm."""
    tiebreak: str = "lowest"

    def commit(self, human_arms, num_arms, rng) -> int:
        from .mechanisms import plurality_outcome

        votes = [modal_arm(np.bincount(arms, minlength=num_arms)) for arms in human_arms if len(arms)]
        return plurality_outcome(votes, num_arms, self.tiebreak, rng)


def simulate(profile: BanditProfile, humans: Sequence, robot, total_rounds: int, seed=None) -> GameTrace:
    """Play the game for ``total_rounds`` rounds.

    The robot only observes which arm each human pulled. Robots from
    :mod:`mpag.mechanisms` with their own protocol (``EfficientOrdinalMechanism``)
    are dispatched to that module.
    """
    if len(humans) != profile.num_humans:
        raise ValueError("need one strategy per human")
    if not hasattr(robot, "chooser"):
        from .mechanisms import run_efficient

        return run_efficient(profile, robot, seed, humans=humans, total_rounds=total_rounds)
    rng = np.random.default_rng(seed)
    N, M = profile.num_humans, profile.num_arms
    human_arms: list[list[int]] = [[] for _ in range(N)]
    choosers = np.empty(total_rounds, dtype=int)
    arms = np.empty(total_rounds, dtype=int)
    committed = None
    for t in range(total_rounds):
        h = robot.chooser(t, N)
        if h < N:
            a = humans[h].choose(profile.utilities[h], human_arms[h], rng)
            if not 0 <= a < M:
                raise ValueError(f"human {h} chose invalid arm {a}")
            human_arms[h].append(a)
        else:
            if committed is None:
                committed = robot.commit(human_arms, M, rng)
            a = committed
        choosers[t], arms[t] = h, a
    return make_trace(choosers, arms, profile)


# ------------------------------------------------------------------ metrics

def regret_curve(trace: GameTrace, profile: BanditProfile) -> np.ndarray:
    return np.cumsum(profile.best_welfare - trace.welfare)


def regret(trace: GameTrace, profile: BanditProfile) -> float:
    """sum_t (w* - w_t)."""
    return float(np.sum(profile.best_welfare - trace.welfare))


def committed_mask(trace: GameTrace) -> np.ndarray:
    return trace.choosers == trace.robot


def truthfulness(trace: GameTrace, profile: BanditProfile, h: int) -> float:
    """Fraction of h's rounds spent on one of h's best arms."""
    mine = trace.choosers == h
    if not mine.any():
        raise NeverChosenError(f"human {h} was never chosen")
    best = np.isin(trace.arms[mine], profile.best_arms(h))
    return float(best.mean())


def linear_regret_witness(M: int) -> BanditProfile:
    """Two humans whose favourite arms both differ from the welfare-optimal arm."""
    if M < 3:
        raise ValueError("the construction needs M >= 3")
    u = np.zeros((2, M))
    u[0, 0], u[0, 1] = 0.6, 0.4
    u[1, M - 1], u[1, 1] = 0.6, 0.4
    profile = BanditProfile(u)
    best_w = set(np.flatnonzero(profile.welfare == profile.welfare.max()).tolist())
    assert all(not (set(profile.best_arms(h).tolist()) & best_w) for h in range(2))
    return profile


def suboptimal_gap(row: np.ndarray) -> float:
    row = np.asarray(row, dtype=float)
    top = row.max()
    worse = row[row < top]
    if worse.size == 0:
        raise NoSuboptimalArmError("every arm is optimal")
    return float(top - worse.max())


def truthfulness_threshold(row: np.ndarray, gamma: float) -> int:
    """Smallest integer T with T > max_a u(a) / ((1 - gamma) * gap)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    bound = float(np.max(row)) / ((1.0 - gamma) * suboptimal_gap(row))
    nearest = round(bound)
    if math.isclose(bound, nearest, rel_tol=1e-12, abs_tol=1e-12):
        bound = float(nearest)
    return math.floor(bound) + 1


@lru_cache(maxsize=None)
def compositions(total: int, parts: int) -> tuple[tuple[int, ...], ...]:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    out = []
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, vec = -1, []
        for c in cuts:
            vec.append(c - prev - 1)
            prev = c
        vec.append(total + parts - 2 - prev)
        out.append(tuple(vec))
    return tuple(out)


def brute_force_dominance(profile: BanditProfile, h: int, T: int, gamma: float, exploit_rounds: int = 1) -> bool:
    """Is every strategy of h with truthfulness < gamma strictly dominated by a truthful one?

    The robot explores for N*T rounds and then commits to the most
    demonstrated arm for ``exploit_rounds`` rounds.  Strategies are open-loop
    arm sequences; the payoff depends on a sequence only through its arm
    counts, so sequences are enumerated up to reordering.  Opponents enter
    only through their summed counts.
    """
    N, M = profile.num_humans, profile.num_arms
    if M > 4 or T > 8 or N > 3:
        raise ValueError("brute force limited to M <= 4, T <= 8, N <= 3")
    if T < 1:
        raise ValueError("T must be positive")
    row = profile.utilities[h]
    best = profile.best_arms(h)

    mine = np.array(compositions(T, M))
    opp_sets = [np.zeros(M, dtype=int)]
    for _ in range(N - 1):
        opp_sets = [o + np.array(c) for o in opp_sets for c in compositions(T, M)]
    opponents = np.unique(np.array(opp_sets).reshape(-1, M), axis=0)

    totals = mine[:, None, :] + opponents[None, :, :]
    commit = np.argmax(totals, axis=2)  # lowest index on ties
    payoff = (mine @ row)[:, None] + exploit_rounds * row[commit]  # (strategies, opponents)

    truth = mine[:, best].sum(axis=1) / T
    truthful = np.isclose(truth, 1.0)
    liars = truth < gamma
    for s in np.flatnonzero(liars):
        if not np.any(np.all(payoff[truthful] > payoff[s], axis=1)):
            return False
    return True


def sequence_payoffs(profile: BanditProfile, h: int, T: int, exploit_rounds: int = 1):
    """Sequence-level payoff table for cross-checking; tiny instances only."""
    N, M = profile.num_humans, profile.num_arms
    row = profile.utilities[h]
    seqs = list(itertools.product(range(M), repeat=T))
    opp = list(itertools.product(seqs, repeat=N - 1))
    table = np.zeros((len(seqs), len(opp)))
    for i, s in enumerate(seqs):
        for j, o in enumerate(opp):
            counts = np.bincount(list(s) + [a for seq in o for a in seq], minlength=M)
            table[i, j] = row[list(s)].sum() + exploit_rounds * row[modal_arm(counts)]
    return seqs, table
