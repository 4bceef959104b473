"""Robot-side social choice: plurality with shared control and an ordinal
elicitation mechanism with harmonic scoring.

The ordinal mechanism is a reconstruction.  Humans are prompted round-robin
and an action is executed only the first time that human picks it, so a
myopic human reveals its ranking from the top down.  After every ``M``
human rounds the robot takes one round itself: with probability
``exploration_prob`` it pulls a uniform arm, otherwise the current harmonic
leader.  Once elicitation ends the robot commits to the harmonic winner.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mdp import seed_sequence
from .bandit import BanditProfile, GameTrace, OrdinalRevealing, make_trace

log = logging.getLogger(__name__)


def plurality_distribution(votes: Sequence[int], num_arms: int | None = None) -> np.ndarray:
    """Outcome lottery of plurality with a uniform tiebreak."""
    votes = np.asarray(votes, dtype=int)
    if votes.size == 0:
        raise ValueError("no votes")
    m = int(votes.max()) + 1 if num_arms is None else num_arms
    counts = np.bincount(votes, minlength=m)
    win = counts == counts.max()
    return win / win.sum()


def plurality_outcome(votes: Sequence[int], num_arms: int | None = None, tiebreak: str = "lowest", seed=None) -> int:
    if tiebreak not in ("lowest", "random"):
        raise ValueError(f"unknown tiebreak {tiebreak!r}")
    p = plurality_distribution(votes, num_arms)
    winners = np.flatnonzero(p)
    if tiebreak == "lowest" or len(winners) == 1:
        return int(winners[0])
    return int(np.random.default_rng(seed).choice(winners))


def incentive_domain_check(row, epsilon: float, C: float, T: int) -> bool:
    """Does the row lie in the separated domain D_{eps,C} with T > 2C/eps?

    The runner-up value u** is the second entry of the row sorted in
    descending order, so a tie at the top gives u* = u**.
    """
    if epsilon <= 0 or C <= 0:
        raise ValueError("epsilon and C must be positive")
    u = np.sort(np.asarray(row, dtype=float))[::-1]
    if u.size < 2:
        raise ValueError("need at least two arms")
    top, runner = u[0], u[1]
    in_domain = top < C and (top == runner or top - runner > epsilon)
    return bool(in_domain and T > 2 * C / epsilon)


@dataclass(frozen=True)
class EfficientOrdinalMechanism:
    rounds_per_human: int | None = None   # default M
    exploration_prob: float | None = None  # default 2**(-1/M)
    exploit_rounds: int | None = None      # default N * rounds_per_human
    scoring: str = "harmonic"

    def __post_init__(self):
        if self.rounds_per_human is not None and self.rounds_per_human < 1:
            raise ValueError("rounds_per_human must be positive")
        if self.exploration_prob is not None and not 0.0 <= self.exploration_prob <= 1.0:
            raise ValueError("exploration_prob must lie in [0, 1]")
        if self.exploit_rounds is not None and self.exploit_rounds < 0:
            raise ValueError("exploit_rounds must be nonnegative")
        if self.scoring != "harmonic":
            raise ValueError("only harmonic scoring is implemented")

    def resolved(self, num_humans: int, num_arms: int) -> tuple[int, float, int]:
        K = num_arms if self.rounds_per_human is None else self.rounds_per_human
        p = 2.0 ** (-1.0 / num_arms) if self.exploration_prob is None else self.exploration_prob
        L = num_humans * K if self.exploit_rounds is None else self.exploit_rounds
        return K, p, L


@dataclass(frozen=True, eq=False)
class ElicitationResult:
    rankings: list[np.ndarray]
    trace: GameTrace
    complete: bool


def harmonic_scores(rankings: Sequence[Sequence[int]], num_arms: int) -> np.ndarray:
    scores = np.zeros(num_arms)
    for r in rankings:
        r = np.asarray(r, dtype=int)
        scores[r] += 1.0 / np.arange(1, len(r) + 1)
    return scores


def harmonic_commit(rankings: Sequence[Sequence[int]]) -> int:
    """argmax_a sum_h 1/rank_h(a), lowest index on ties."""
    if not rankings:
        raise ValueError("no rankings")
    M = len(rankings[0])
    for r in rankings:
        if len(r) != M or sorted(int(a) for a in r) != list(range(M)):
            raise ValueError("harmonic_commit needs complete rankings of the same arms")
    return int(np.argmax(harmonic_scores(rankings, M)))


def _elicit(profile: BanditProfile, mech: EfficientOrdinalMechanism, rng, humans):
    N, M = profile.num_humans, profile.num_arms
    K, p, _ = mech.resolved(N, M)
    humans = [OrdinalRevealing()] * N if humans is None else list(humans)
    if len(humans) != N:
        raise ValueError("need one strategy per human")
    revealed: list[list[int]] = [[] for _ in range(N)]
    asked: list[list[int]] = [[] for _ in range(N)]
    choosers, arms = [], []
    for i in range(N * K):
        h = i % N
        a = humans[h].choose(profile.utilities[h], asked[h], rng)
        if not 0 <= a < M:
            raise ValueError(f"human {h} chose invalid arm {a}")
        asked[h].append(a)
        if a not in revealed[h]:
            revealed[h].append(a)
            choosers.append(h)
            arms.append(a)
        if (i + 1) % M == 0:
            if rng.random() < p:
                a = int(rng.integers(M))
            else:
                a = int(np.argmax(harmonic_scores(revealed, M)))
            choosers.append(N)
            arms.append(a)
    return revealed, choosers, arms


def elicit_ordinal(profile: BanditProfile, mech: EfficientOrdinalMechanism = EfficientOrdinalMechanism(),
                   seed=None, humans=None) -> ElicitationResult:
    """Run the elicitation phase and return the revealed rankings and trace."""
    rng = np.random.default_rng(seed)
    revealed, choosers, arms = _elicit(profile, mech, rng, humans)
    complete = all(len(r) == profile.num_arms for r in revealed)
    if not complete:
        log.warning("elicitation ended with partial rankings")
    rankings = [np.array(r, dtype=int) for r in revealed]
    return ElicitationResult(rankings, make_trace(choosers, arms, profile), complete)


def run_efficient(profile: BanditProfile, mech: EfficientOrdinalMechanism = EfficientOrdinalMechanism(),
                  seed=None, humans=None, total_rounds: int | None = None) -> GameTrace:
    """Elicitation followed by commitment to the harmonic winner.

    ``total_rounds`` overrides the exploitation length so that the whole
    trace has that many rounds (elicitation is truncated if it is longer).
    """
    rng = np.random.default_rng(seed)
    N, M = profile.num_humans, profile.num_arms
    _, _, L = mech.resolved(N, M)
    revealed, choosers, arms = _elicit(profile, mech, rng, humans)
    commit = int(np.argmax(harmonic_scores(revealed, M)))
    if total_rounds is not None:
        L = max(total_rounds - len(arms), 0)
    choosers = choosers + [N] * L
    arms = arms + [commit] * L
    if total_rounds is not None:
        choosers, arms = choosers[:total_rounds], arms[:total_rounds]
    return make_trace(choosers, arms, profile)


# ------------------------------------------------------------------ distortion

def _batch_welfare(U: np.ndarray, mech: EfficientOrdinalMechanism, basis: str = "full") -> np.ndarray:
    """Expected mean welfare per executed round for a batch of profiles (P, N, M),
    with truthful ranking-revealing humans."""
    P, N, M = U.shape
    K, p, L = mech.resolved(N, M)
    w = U.mean(axis=1)  # (P, M)
    order = np.argsort(-U, axis=2, kind="stable")  # rankings
    rows = np.arange(P)
    scores = np.zeros((P, M))
    counts = np.zeros(N, dtype=int)
    total = np.zeros(P)
    executed = 0
    mean_w = w.mean(axis=1)
    for i in range(N * K):
        h = i % N
        k = counts[h]
        if k < M:
            arm = order[:, h, k]
            scores[rows, arm] += 1.0 / (k + 1)
            total += w[rows, arm]
            counts[h] += 1
            executed += 1
        if (i + 1) % M == 0:
            leader = np.argmax(scores, axis=1)
            total += p * mean_w + (1 - p) * w[rows, leader]
            executed += 1
    commit = np.argmax(scores, axis=1)
    committed = w[rows, commit]
    if basis == "committed":
        return committed
    if basis != "full":
        raise ValueError(f"unknown welfare basis {basis!r}")
    total += L * committed
    return total / (executed + L)


def expected_welfare(profile: BanditProfile, mech: EfficientOrdinalMechanism = EfficientOrdinalMechanism(),
                     basis: str = "full") -> float:
    """Expected per-round welfare of the mechanism under truthful revelation.

    ``basis="full"`` averages over every executed round (human reveals,
    robot exploration rounds, exploitation); ``basis="committed"`` is the
    welfare of the committed arm alone.
    """
    return float(_batch_welfare(profile.utilities[None], mech, basis)[0])


def distortion_ratio(profile: BanditProfile, mech: EfficientOrdinalMechanism = EfficientOrdinalMechanism(),
                     basis: str = "full") -> float:
    return profile.best_welfare / expected_welfare(profile, mech, basis)


def batch_distortion(U: np.ndarray, mech: EfficientOrdinalMechanism = EfficientOrdinalMechanism(),
                     basis: str = "full") -> np.ndarray:
    U = np.asarray(U, dtype=float)
    return U.mean(axis=1).max(axis=1) / _batch_welfare(U, mech, basis)


def sample_profiles(rng, count: int, N: int, M: int) -> np.ndarray:
    """Independent uniform draws from the utility simplex, shape (count, N, M)."""
    return rng.dirichlet(np.ones(M), size=(count, N))


def scaling(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return np.sqrt(M * np.log(M))


@dataclass(frozen=True, eq=False)
class DistortionReport:
    M_values: np.ndarray
    max_distortion: np.ndarray
    c: float            # smallest c bounding every M <= fit_max_M
    c_lsq: float        # least-squares slope through the origin on the same range
    fit_max_M: int

    @property
    def fitted_bound(self) -> np.ndarray:
        return self.c * scaling(self.M_values)

    def validate(self, slack: float = 0.25) -> bool:
        """Held-out check: max distortion <= (1 + slack) * c * sqrt(M log M) for M > fit_max_M."""
        held = self.M_values > self.fit_max_M
        return bool(np.all(self.max_distortion[held] <= (1 + slack) * self.fitted_bound[held]))

    def as_dict(self) -> dict:
        return {int(m): float(d) for m, d in zip(self.M_values, self.max_distortion)}


def distortion_estimate(mech: EfficientOrdinalMechanism = EfficientOrdinalMechanism(), M_values=range(3, 21),
                        profiles_per_M: int = 10_000, N: int = 3, seed=None, fit_max_M: int = 10,
                        basis: str = "full", chunk: int = 2_000) -> DistortionReport:
    """Worst sampled distortion per M and a sqrt(M log M) fit.

    Each M gets its own child seed and profiles are drawn in fixed-size
    chunks, so results do not depend on how the work is scheduled.
    """
    if profiles_per_M < 1:
        raise ValueError("profiles_per_M must be positive")
    Ms = np.array(sorted(set(int(m) for m in M_values)))
    if Ms.size == 0 or Ms.min() < 2:
        raise ValueError("M values must be >= 2")
    children = seed_sequence(seed).spawn(len(Ms))
    worst = np.empty(len(Ms))
    for i, (M, ss) in enumerate(zip(Ms, children)):
        best = 1.0
        for j, css in enumerate(ss.spawn(math.ceil(profiles_per_M / chunk))):
            n = min(chunk, profiles_per_M - j * chunk)
            U = sample_profiles(np.random.default_rng(css), n, N, int(M))
            best = max(best, float(batch_distortion(U, mech, basis).max()))
        worst[i] = best
    fit = Ms <= fit_max_M
    if not fit.any():
        raise ValueError("no M values inside the fit range")
    x = scaling(Ms[fit])
    c = float(np.max(worst[fit] / x))
    c_lsq = float(worst[fit] @ x / (x @ x))
    return DistortionReport(Ms, worst, c, c_lsq, fit_max_M)
