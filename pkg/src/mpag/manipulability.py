"""Manipulability of plurality (uniform tiebreak) with three voters and three
alternatives, when votes are announced versus demonstrated.

A profile is manipulable if some voter gains by a unilateral untruthful vote
while the other two vote their true tops.  Announcing costs nothing;
demonstrating a pays u_h(a) immediately, with one demonstration round and
one outcome round weighted equally.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .mdp import seed_sequence
from .mechanisms import plurality_distribution

Z_99 = 2.5758293035489004  # two-sided 99% normal quantile


class TiedTopError(ValueError):
    """A voter has more than one top alternative."""


@dataclass(frozen=True, eq=False)
class VoterProfile3:
    utilities: np.ndarray  # (3 voters, 3 alternatives)

    def __post_init__(self):
        u = np.array(self.utilities, dtype=float)
        if u.shape != (3, 3):
            raise ValueError("need 3 voters x 3 alternatives")
        if np.any(u < -1e-9) or not np.allclose(u.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("each voter's utilities must lie on the simplex")
        u.setflags(write=False)
        object.__setattr__(self, "utilities", u)

    def tops(self) -> np.ndarray:
        u = self.utilities
        if np.any((u == u.max(axis=1, keepdims=True)).sum(axis=1) > 1):
            raise TiedTopError("a voter has tied top alternatives")
        return u.argmax(axis=1)


@dataclass(frozen=True, eq=False)
class ManipulabilityRecord:
    profile: VoterProfile3
    manipulable_announce: bool
    manipulable_demo: bool


def _simplex_gaps(rng, shape) -> np.ndarray:
    cuts = np.sort(rng.random(shape + (2,)), axis=-1)
    a, b = cuts[..., 0], cuts[..., 1] - cuts[..., 0]
    return np.stack([a, b, 1.0 - (a + b)], axis=-1)


def sample_profile(seed=None) -> VoterProfile3:
    """Three independent uniform points of the 2-simplex (sorted-uniform gaps)."""
    rng = np.random.default_rng(seed)
    while True:
        u = _simplex_gaps(rng, (3,))
        if _has_unique_tops(u[None])[0]:
            return VoterProfile3(u)


def _has_unique_tops(U: np.ndarray) -> np.ndarray:
    return np.all((U == U.max(axis=2, keepdims=True)).sum(axis=2) == 1, axis=1)


def sample_batch(rng, n: int) -> np.ndarray:
    """n profiles as an (n, 3, 3) array; tied-top profiles are redrawn."""
    U = _simplex_gaps(rng, (n, 3))
    bad = ~_has_unique_tops(U)
    while bad.any():
        U[bad] = _simplex_gaps(rng, (int(bad.sum()), 3))
        bad = ~_has_unique_tops(U)
    return U


def _deviation_payoffs(profile: VoterProfile3, h: int):
    """Expected outcome utility for each vote of voter h, others truthful."""
    u = profile.utilities[h]
    votes = list(profile.tops())
    out = []
    for a in range(3):
        votes[h] = a
        out.append(float(plurality_distribution(votes, 3) @ u))
    return np.array(out)


def manipulable_by_announcing(profile: VoterProfile3) -> bool:
    tops = profile.tops()
    for h in range(3):
        pay = _deviation_payoffs(profile, h)
        if any(pay[a] > pay[tops[h]] for a in range(3) if a != tops[h]):
            return True
    return False


def manipulable_by_demonstrating(profile: VoterProfile3) -> bool:
    tops = profile.tops()
    for h in range(3):
        pay = _deviation_payoffs(profile, h) + profile.utilities[h]
        if any(pay[a] > pay[tops[h]] for a in range(3) if a != tops[h]):
            return True
    return False


def classify(profile: VoterProfile3) -> ManipulabilityRecord:
    return ManipulabilityRecord(profile, manipulable_announce=manipulable_by_announcing(profile),
                                manipulable_demo=manipulable_by_demonstrating(profile))


def classify_batch(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized versions of both deciders for an (n, 3, 3) batch."""
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    if not _has_unique_tops(U).all():
        raise TiedTopError("batch contains tied-top profiles")
    tops = U.argmax(axis=2)
    rows = np.arange(n)
    announce = np.zeros(n, dtype=bool)
    demo = np.zeros(n, dtype=bool)
    for h in range(3):
        u = U[:, h, :]
        pay = np.empty((n, 3))
        for a in range(3):
            votes = tops.copy()
            votes[:, h] = a
            counts = np.stack([(votes == k).sum(axis=1) for k in range(3)], axis=1)
            win = counts == counts.max(axis=1, keepdims=True)
            pay[:, a] = (win * u).sum(axis=1) / win.sum(axis=1)
        truth_pay = pay[rows, tops[:, h]]
        lie = np.ones((n, 3), dtype=bool)
        lie[rows, tops[:, h]] = False
        announce |= np.any(lie & (pay > truth_pay[:, None]), axis=1)
        dpay = pay + u
        demo |= np.any(lie & (dpay > dpay[rows, tops[:, h]][:, None]), axis=1)
    return announce, demo


@dataclass(frozen=True, eq=False)
class ProportionEstimate:
    p_announce_only: float
    p_demo_only: float
    p_both: float
    confidence_radius: float
    num_samples: int
    counterexamples: np.ndarray  # demo-only profiles, (k, 3, 3)

    @property
    def p_announce(self) -> float:
        return self.p_announce_only + self.p_both


def _count_chunk(ss: np.random.SeedSequence, n: int):
    U = sample_batch(np.random.default_rng(ss), n)
    ann, dem = classify_batch(U)
    return int(np.sum(ann & ~dem)), int(np.sum(dem & ~ann)), int(np.sum(ann & dem)), U[dem & ~ann]


def estimate_proportions(num_samples: int, seed=None, chunk: int = 100_000, threads: int = 1) -> ProportionEstimate:
    """Monte Carlo manipulability proportions with a 99% confidence radius.

    Chunks get child seeds in a fixed order, so the result is identical for
    any number of threads.
    """
    if num_samples < 10_000:
        raise ValueError("num_samples must be at least 10^4")
    if threads < 1:
        raise ValueError("threads must be positive")
    k = math.ceil(num_samples / chunk)
    seeds = seed_sequence(seed).spawn(k)
    sizes = [min(chunk, num_samples - i * chunk) for i in range(k)]
    if threads == 1:
        parts = [_count_chunk(s, n) for s, n in zip(seeds, sizes)]
    else:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(_count_chunk, seeds, sizes))
    a_only = sum(p[0] for p in parts)
    d_only = sum(p[1] for p in parts)
    both = sum(p[2] for p in parts)
    bad = np.concatenate([p[3] for p in parts]) if parts else np.zeros((0, 3, 3))
    p = a_only / num_samples
    radius = Z_99 * math.sqrt(p * (1 - p) / num_samples)
    return ProportionEstimate(p, d_only / num_samples, both / num_samples, radius, num_samples, bad)


def exact_proportions() -> dict[str, Fraction]:
    """Closed-form proportions under the uniform product measure.

    Only profiles with three distinct tops (probability 2/9) are manipulable.
    There a voter gains by announcing iff its middle utility exceeds 1/3
    (probability 1/3), and by demonstrating iff twice its middle utility
    exceeds its top utility plus 1/3 (probability 1/9).  Voters are
    independent given their tops.
    """
    distinct = Fraction(2, 9)
    q, r = Fraction(1, 3), Fraction(1, 9)
    no_ann, no_demo = (1 - q) ** 3, (1 - r) ** 3
    return {
        "announce_only": distinct * (no_demo - no_ann),
        "both": distinct * (1 - no_demo),
        "demo_only": Fraction(0),
        "announce": distinct * (1 - no_ann),
    }
