"""Config-driven experiments.  Each runner returns tables and a JSON-able
summary; writing them to disk is the CLI's job.

Configs are plain dataclasses built from dicts.  Every field is checked
before any computation starts and failures name the offending field.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .attack import attack_outcome, build_attack, expert_trajectory, solve_attack, state_visits
from .bandit import (
    BanditProfile,
    Boltzmann,
    ExploreThenCommit,
    brute_force_dominance,
    committed_mask,
    linear_regret_witness,
    regret,
    regret_curve,
    simulate,
    truthfulness_threshold,
)
from .incentives import (
    alpha_honesty_threshold,
    best_response,
    expected_externality,
    same_behaviour,
    threshold_toy,
    value_spectrum,
)
from .irl import IrlConfig, empirical_feature_counts, maxent_irl, soft_value_iteration, _soft_counts
from .manipulability import estimate_proportions, exact_proportions
from .mdp import LinearReward, grid_heatmap, gridworld, rollout, seed_sequence, value_iteration
from .mechanisms import EfficientOrdinalMechanism, distortion_estimate, elicit_ordinal, sample_profiles

# Feature regions of the shipped 5x6 gridworld (row, col); start is bottom-left.
GRID_LAYOUT = (
    ((4, 4), (4, 5)),            # feature 1
    ((0, 1), (0, 2), (1, 2)),    # feature 2
    ((1, 0), (2, 0), (3, 0)),    # feature 3
)


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _need(ok: bool, name: str, message: str):
    if not ok:
        raise ConfigError(name, message)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _numbers(name, xs, length=None):
    _need(isinstance(xs, (list, tuple)) and all(_is_num(x) for x in xs), name, "must be a list of numbers")
    if length is not None:
        _need(len(xs) == length, name, f"must have length {length}")


@dataclass(frozen=True)
class ExperimentResult:
    tables: dict[str, tuple[tuple[str, ...], list]]   # file name -> (header, rows)
    grids: dict[str, np.ndarray]                       # file name -> headerless grid
    summary: dict[str, Any]
    converged: bool = True


class _Config:
    """Mixin: construction from a dict with unknown-field detection."""

    @classmethod
    def from_dict(cls, d: dict | None):
        d = dict(d or {})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _irl_fields(cfg, prefix=""):
    _need(_is_num(cfg.learning_rate) and cfg.learning_rate > 0, "learning_rate", "must be positive")
    _need(_is_int(cfg.irl_max_iters) and cfg.irl_max_iters >= 1, "irl_max_iters", "must be an integer >= 1")
    _need(_is_num(cfg.grad_tolerance) and cfg.grad_tolerance > 0, "grad_tolerance", "must be positive")


def _grid_fields(cfg):
    _need(_is_int(cfg.rows) and cfg.rows >= 1, "rows", "must be a positive integer")
    _need(_is_int(cfg.cols) and cfg.cols >= 1, "cols", "must be a positive integer")
    _need(_is_int(cfg.horizon) and cfg.horizon >= 1, "horizon", "must be a positive integer")
    _need(_is_num(cfg.gamma_discount) and 0 < cfg.gamma_discount <= 1, "gamma_discount", "must lie in (0, 1]")
    ok = isinstance(cfg.regions, (list, tuple)) and len(cfg.regions) >= 1
    for reg in cfg.regions if ok else ():
        for cell in reg:
            ok = ok and len(cell) == 2 and all(_is_int(v) for v in cell)
            ok = ok and 0 <= cell[0] < cfg.rows and 0 <= cell[1] < cfg.cols
    _need(ok, "regions", "must be a list of feature regions, each a list of in-grid [row, col] cells")
    if cfg.start is not None:
        s = cfg.start
        _need(len(s) == 2 and all(_is_int(v) for v in s) and 0 <= s[0] < cfg.rows and 0 <= s[1] < cfg.cols,
              "start", "must be an in-grid [row, col] cell or null")


def _grid(cfg):
    start = None if cfg.start is None else tuple(cfg.start)
    regions = [[tuple(c) for c in reg] for reg in cfg.regions]
    return gridworld(cfg.rows, cfg.cols, regions, cfg.horizon, cfg.gamma_discount, start)


def _to_lists(x):
    return [list(map(list, r)) if isinstance(r[0], (list, tuple)) else list(r) for r in x]


# ------------------------------------------------------------------ attack

@dataclass(frozen=True)
class AttackConfig(_Config):
    rows: int = 5
    cols: int = 6
    horizon: int = 40
    gamma_discount: float = 0.95
    regions: Any = field(default_factory=lambda: _to_lists(GRID_LAYOUT))
    start: Any = None
    attacker_omega: Any = (0.9, 1.0, 0.0)
    opponent_omegas: Any = ((0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
    lambdas: Any = (0.1, 1.0, 10.0)
    alphas: Any = (0.1, 0.5, 0.9)
    solver_max_iters: int = 500
    solver_tol: float = 1e-4
    step: str = "standard"
    learning_rate: float = 0.1
    irl_max_iters: int = 2000
    grad_tolerance: float = 1e-5
    fail_on_nonconvergence: bool = False

    def validate(self):
        _grid_fields(self)
        d = len(self.regions)
        _numbers("attacker_omega", self.attacker_omega, d)
        _need(isinstance(self.opponent_omegas, (list, tuple)) and len(self.opponent_omegas) >= 1,
              "opponent_omegas", "must be a nonempty list of weight vectors")
        for w in self.opponent_omegas:
            _numbers("opponent_omegas", w, d)
        _numbers("lambdas", self.lambdas)
        _need(len(self.lambdas) >= 1 and all(l >= 0 for l in self.lambdas), "lambdas", "must be nonnegative")
        _numbers("alphas", self.alphas)
        _need(len(self.alphas) >= 1 and all(0 <= a <= 1 for a in self.alphas), "alphas", "must lie in [0, 1]")
        _need(_is_int(self.solver_max_iters) and self.solver_max_iters >= 1, "solver_max_iters", "must be >= 1")
        _need(_is_num(self.solver_tol) and self.solver_tol > 0, "solver_tol", "must be positive")
        _need(self.step in ("standard", "line_search"), "step", "must be 'standard' or 'line_search'")
        _irl_fields(self)

    @property
    def irl(self) -> IrlConfig:
        return IrlConfig(self.learning_rate, self.irl_max_iters, self.grad_tolerance)


@dataclass(frozen=True, eq=False)
class OpponentResult:
    omega: np.ndarray
    other: Any                  # the opponent's trajectory
    expert: Any                 # attacker's optimal trajectory
    expert_eval: Any
    attacks: dict               # lambda -> (AttackSolution, AttackEvaluation)
    rows: list                  # (lambda, alpha, utility_expert, utility_attack, gap, iters)

    def best_gain(self) -> float:
        """Largest relative utility gain of the attack over the expert."""
        return max((ua - ue) / abs(ue) if ue != 0 else (math.inf if ua > 0 else 0.0)
                   for _, _, ue, ua, _, _ in self.rows)

    def expert_shortfall(self) -> float:
        """Largest relative amount by which some candidate beats the expert, per alpha."""
        worst = 0.0
        for _, _, ue, ua, _, _ in self.rows:
            top = max(ue, ua)
            if top > 0:
                worst = max(worst, (top - ue) / top)
        return worst


def attack_sweep(cfg: AttackConfig = AttackConfig(), seed=0) -> tuple[Any, list[OpponentResult]]:
    mdp = _grid(cfg)
    w2 = LinearReward(cfg.attacker_omega)
    out = []
    for omega in cfg.opponent_omegas:
        w1 = LinearReward(omega)
        xi1 = expert_trajectory(mdp, w1, seed)
        exp2 = expert_trajectory(mdp, w2, seed)
        cache = {}

        def evaluate(traj):
            if traj not in cache:
                cache[traj] = attack_outcome(mdp, w2, xi1, traj, 1.0, cfg.irl)
            return cache[traj]

        ev_e = evaluate(exp2)
        attacks, rows = {}, []
        for lam in cfg.lambdas:
            sol = solve_attack(build_attack(mdp, w2, xi1, lam), cfg.solver_max_iters, cfg.solver_tol, cfg.step, seed=seed)
            ev_a = evaluate(sol.best_response)
            attacks[lam] = (sol, ev_a)
            for a in cfg.alphas:
                ue = a * ev_e.demo_value + (1 - a) * ev_e.robot_value
                ua = a * ev_a.demo_value + (1 - a) * ev_a.robot_value
                rows.append((lam, a, ue, ua, sol.duality_gap, sol.iterations))
        out.append(OpponentResult(np.asarray(omega, float), xi1, exp2, ev_e, attacks, rows))
    return mdp, out


def run_attack(cfg: AttackConfig, seed=0, threads=1) -> ExperimentResult:
    mdp, results = attack_sweep(cfg, seed)
    tables, grids, summary = {}, {}, {"opponents": []}
    converged = True
    heat = lambda traj: grid_heatmap(cfg.rows, cfg.cols, state_visits(mdp, traj))
    for i, res in enumerate(results):
        tables[f"attack_report_{i}.csv"] = (("lambda", "alpha", "utility_expert", "utility_attack", "gap", "iters"), res.rows)
        grids[f"heatmap_{i}_other.csv"] = heat(res.other)
        grids[f"heatmap_{i}_expert.csv"] = heat(res.expert)
        grids[f"heatmap_{i}_robot_honest.csv"] = heat(rollout(mdp, res.expert_eval.robot.policy, seed))
        for lam, (sol, ev) in res.attacks.items():
            grids[f"heatmap_{i}_attack_lambda{lam:g}.csv"] = heat(sol.best_response)
            grids[f"heatmap_{i}_robot_attack_lambda{lam:g}.csv"] = heat(rollout(mdp, ev.robot.policy, seed))
            converged &= sol.converged and ev.robot.converged
        converged &= res.expert_eval.robot.converged
        summary["opponents"].append({
            "omega": res.omega.tolist(),
            "best_relative_gain": res.best_gain(),
            "expert_shortfall": res.expert_shortfall(),
        })
    summary["irl_converged"] = bool(converged)
    return ExperimentResult(tables, grids, summary, converged)


# ------------------------------------------------------------------ bandit regret

@dataclass(frozen=True)
class BanditRegretConfig(_Config):
    witness_M: int = 3
    beta: float = 1e6
    rounds_per_human: int = 50
    total_rounds: int = 10_000
    single_human_profiles: int = 100
    single_human_max_M: int = 5
    min_gap: float = 0.05
    single_human_rounds: int = 1_000

    def validate(self):
        _need(_is_int(self.witness_M) and self.witness_M >= 3, "witness_M", "must be an integer >= 3")
        _need(_is_num(self.beta) and self.beta >= 0, "beta", "must be nonnegative")
        _need(_is_int(self.rounds_per_human) and self.rounds_per_human >= 1, "rounds_per_human", "must be >= 1")
        _need(_is_int(self.total_rounds) and self.total_rounds > 2 * self.rounds_per_human, "total_rounds",
              "must exceed the exploration length")
        _need(_is_int(self.single_human_profiles) and self.single_human_profiles >= 1, "single_human_profiles", "must be >= 1")
        _need(_is_int(self.single_human_max_M) and self.single_human_max_M >= 2, "single_human_max_M", "must be >= 2")
        _need(_is_num(self.min_gap) and 0 <= self.min_gap < 1, "min_gap", "must lie in [0, 1)")
        _need(_is_int(self.single_human_rounds) and self.single_human_rounds > self.rounds_per_human,
              "single_human_rounds", "must exceed rounds_per_human")
        # the gap must be achievable for the smallest number of arms
        _need(self.min_gap < 1, "min_gap", "too large")


def random_gapped_row(rng, M: int, min_gap: float) -> np.ndarray:
    """Uniform simplex row conditioned on the top two entries differing by >= min_gap."""
    while True:
        u = rng.dirichlet(np.ones(M))
        top2 = np.sort(u)[-2:]
        if top2[1] - top2[0] >= min_gap:
            return u


def committed_slope(trace, profile) -> float:
    mask = committed_mask(trace)
    curve = regret_curve(trace, profile)
    t = np.flatnonzero(mask)
    return float(np.polyfit(t, curve[t], 1)[0])


def single_human_study(cfg: BanditRegretConfig, seed=0) -> list[tuple[int, int, float]]:
    """(profile index, M, committed-phase regret) for random single-human profiles."""
    rows = []
    for i, ss in enumerate(seed_sequence(seed).spawn(cfg.single_human_profiles)):
        rng = np.random.default_rng(ss)
        M = int(rng.integers(2, cfg.single_human_max_M + 1))
        profile = BanditProfile(random_gapped_row(rng, M, cfg.min_gap)[None])
        trace = simulate(profile, [Boltzmann(cfg.beta)], ExploreThenCommit(cfg.rounds_per_human),
                         cfg.single_human_rounds, rng)
        mask = committed_mask(trace)
        rows.append((i, M, float(np.sum(profile.best_welfare - trace.welfare[mask]))))
    return rows


def witness_run(cfg: BanditRegretConfig, seed=0):
    profile = linear_regret_witness(cfg.witness_M)
    humans = [Boltzmann(cfg.beta)] * profile.num_humans
    trace = simulate(profile, humans, ExploreThenCommit(cfg.rounds_per_human), cfg.total_rounds, seed)
    return profile, trace


def run_bandit_regret(cfg: BanditRegretConfig, seed=0, threads=1) -> ExperimentResult:
    s_w, s_h = seed_sequence(seed).spawn(2)
    profile, trace = witness_run(cfg, s_w)
    curve = regret_curve(trace, profile)
    single = single_human_study(cfg, s_h)
    zero = sum(1 for _, _, r in single if r == 0)
    tables = {
        "witness_trace.csv": (("t", "chooser", "arm", "welfare"), [(t, c, a, w) for t, (c, a, w) in enumerate(trace.rounds())]),
        "witness_regret.csv": (("t", "cum_regret"), list(enumerate(curve.tolist()))),
        "single_human.csv": (("profile", "M", "committed_regret"), single),
    }
    summary = {
        "witness_total_regret": regret(trace, profile),
        "witness_committed_slope": committed_slope(trace, profile),
        "single_human_zero_regret": zero,
        "single_human_profiles": len(single),
    }
    return ExperimentResult(tables, {}, summary)


# ------------------------------------------------------------------ dominance

@dataclass(frozen=True)
class DominanceConfig(_Config):
    profile: Any = ((0.6, 0.3, 0.1), (0.1, 0.3, 0.6))
    human: int = 0
    gamma_truthfulness: float = 0.5
    T_values: Any = (1, 2, 3, 4, 5, 6)
    exploit_rounds: int = 1
    pivot_profile: Any = ((0.0, 1.0, 0.0), (0.45, 0.0, 0.55))
    pivot_human: int = 1
    pivot_T: int = 1

    def validate(self):
        for name in ("profile", "pivot_profile"):
            p = getattr(self, name)
            _need(isinstance(p, (list, tuple)) and len(p) >= 1, name, "must be a list of utility rows")
            for row in p:
                _numbers(name, row, len(p[0]))
            try:
                prof = BanditProfile(np.array(p, dtype=float))
            except ValueError as e:
                raise ConfigError(name, str(e)) from None
            _need(prof.num_humans <= 3 and prof.num_arms <= 4, name, "brute force allows N <= 3 and M <= 4")
        _need(_is_int(self.human) and 0 <= self.human < len(self.profile), "human", "must index a row of profile")
        _need(_is_int(self.pivot_human) and 0 <= self.pivot_human < len(self.pivot_profile), "pivot_human",
              "must index a row of pivot_profile")
        _need(_is_num(self.gamma_truthfulness) and 0 < self.gamma_truthfulness < 1, "gamma_truthfulness",
              "must lie in (0, 1)")
        _need(isinstance(self.T_values, (list, tuple)) and all(_is_int(t) and 1 <= t <= 8 for t in self.T_values),
              "T_values", "must be integers in [1, 8]")
        _need(_is_int(self.pivot_T) and 1 <= self.pivot_T <= 8, "pivot_T", "must be an integer in [1, 8]")
        _need(_is_int(self.exploit_rounds) and self.exploit_rounds >= 1, "exploit_rounds", "must be >= 1")
        row = np.array(self.profile[self.human], dtype=float)
        _need(np.any(row < row.max()), "profile", "the chosen human needs a suboptimal arm")


def run_dominance(cfg: DominanceConfig, seed=0, threads=1) -> ExperimentResult:
    prof = BanditProfile(np.array(cfg.profile, dtype=float))
    pivot = BanditProfile(np.array(cfg.pivot_profile, dtype=float))
    g = cfg.gamma_truthfulness
    threshold = truthfulness_threshold(prof.utilities[cfg.human], g)
    rows = [("main", T, threshold, brute_force_dominance(prof, cfg.human, T, g, cfg.exploit_rounds))
            for T in cfg.T_values]
    pivot_row = pivot.utilities[cfg.pivot_human]
    pivot_thr = truthfulness_threshold(pivot_row, g) if np.any(pivot_row < pivot_row.max()) else -1
    pivot_dom = brute_force_dominance(pivot, cfg.pivot_human, cfg.pivot_T, g, cfg.exploit_rounds)
    rows.append(("pivot", cfg.pivot_T, pivot_thr, pivot_dom))
    summary = {
        "threshold": threshold,
        "dominated": {str(T): bool(d) for _, T, _, d in rows[:-1]},
        "pivot_dominated": bool(pivot_dom),
    }
    return ExperimentResult({"dominance.csv": (("case", "T", "threshold", "dominated"), rows)}, {}, summary)


# ------------------------------------------------------------------ manipulability

@dataclass(frozen=True)
class ManipConfig(_Config):
    num_samples: int = 1_000_000
    chunk: int = 100_000

    def validate(self):
        _need(_is_int(self.num_samples) and self.num_samples >= 10_000, "num_samples", "must be an integer >= 10^4")
        _need(_is_int(self.chunk) and self.chunk >= 1, "chunk", "must be a positive integer")


def run_manip(cfg: ManipConfig, seed=0, threads=1) -> ExperimentResult:
    est = estimate_proportions(cfg.num_samples, seed, cfg.chunk, threads)
    exact = exact_proportions()
    rows = [
        ("p_announce_only", est.p_announce_only, float(exact["announce_only"])),
        ("p_demo_only", est.p_demo_only, float(exact["demo_only"])),
        ("p_both", est.p_both, float(exact["both"])),
        ("p_announce", est.p_announce, float(exact["announce"])),
        ("confidence_radius", est.confidence_radius, 0.0),
    ]
    cex = [tuple(u.ravel()) for u in est.counterexamples]
    header = tuple(f"u{v}_{a}" for v in range(3) for a in range(3))
    summary = {r[0]: r[1] for r in rows}
    summary["num_samples"] = cfg.num_samples
    summary["counterexamples"] = len(cex)
    return ExperimentResult({"proportions.csv": (("quantity", "estimate", "closed_form"), rows),
                             "counterexamples.csv": (header, cex)}, {}, summary)


# ------------------------------------------------------------------ distortion

@dataclass(frozen=True)
class DistortionConfig(_Config):
    M_min: int = 3
    M_max: int = 20
    profiles_per_M: int = 10_000
    N: int = 3
    fit_max_M: int = 10
    slack: float = 0.25
    rounds_per_human: Any = None
    exploration_prob: Any = None
    exploit_rounds: Any = None
    basis: str = "full"

    def validate(self):
        _need(_is_int(self.M_min) and self.M_min >= 2, "M_min", "must be an integer >= 2")
        _need(_is_int(self.M_max) and self.M_max >= self.M_min, "M_max", "must be >= M_min")
        _need(_is_int(self.profiles_per_M) and self.profiles_per_M >= 1, "profiles_per_M", "must be >= 1")
        _need(_is_int(self.N) and self.N >= 1, "N", "must be a positive integer")
        _need(_is_int(self.fit_max_M) and self.M_min <= self.fit_max_M, "fit_max_M", "must be >= M_min")
        _need(_is_num(self.slack) and self.slack >= 0, "slack", "must be nonnegative")
        _need(self.rounds_per_human is None or (_is_int(self.rounds_per_human) and self.rounds_per_human >= 1),
              "rounds_per_human", "must be a positive integer or null")
        _need(self.exploration_prob is None or (_is_num(self.exploration_prob) and 0 <= self.exploration_prob <= 1),
              "exploration_prob", "must lie in [0, 1] or be null")
        _need(self.exploit_rounds is None or (_is_int(self.exploit_rounds) and self.exploit_rounds >= 0),
              "exploit_rounds", "must be a nonnegative integer or null")
        _need(self.basis in ("full", "committed"), "basis", "must be 'full' or 'committed'")

    @property
    def mechanism(self) -> EfficientOrdinalMechanism:
        return EfficientOrdinalMechanism(self.rounds_per_human, self.exploration_prob, self.exploit_rounds)


def run_distortion(cfg: DistortionConfig, seed=0, threads=1) -> ExperimentResult:
    s_est, s_demo = seed_sequence(seed).spawn(2)
    rep = distortion_estimate(cfg.mechanism, range(cfg.M_min, cfg.M_max + 1), cfg.profiles_per_M, cfg.N, s_est,
                              cfg.fit_max_M, cfg.basis)
    rows = list(zip(rep.M_values.tolist(), rep.max_distortion.tolist(), rep.fitted_bound.tolist()))
    rng = np.random.default_rng(s_demo)
    demo = BanditProfile(sample_profiles(rng, 1, cfg.N, cfg.M_min)[0])
    el = elicit_ordinal(demo, cfg.mechanism, rng)
    summary = {"c": rep.c, "c_lsq": rep.c_lsq, "validated": rep.validate(cfg.slack), "slack": cfg.slack}
    return ExperimentResult({
        "distortion.csv": (("M", "max_distortion", "fitted_bound"), rows),
        "rankings.csv": (("human", "rank", "arm"),
                         [(h, k + 1, int(a)) for h, r in enumerate(el.rankings) for k, a in enumerate(r)]),
    }, {}, summary)


# ------------------------------------------------------------------ incentives

@dataclass(frozen=True)
class IncentivesConfig(_Config):
    alphas: Any = (0.0, 0.5, 0.8, 0.83, 0.84, 0.9, 1.0)

    def validate(self):
        _numbers("alphas", self.alphas)
        _need(len(self.alphas) >= 1 and all(0 <= a <= 1 for a in self.alphas), "alphas", "must lie in [0, 1]")


def run_incentives(cfg: IncentivesConfig, seed=0, threads=1) -> ExperimentResult:
    toy = threshold_toy()
    bound = alpha_honesty_threshold(value_spectrum(toy.mdp, toy.reward))
    rows = []
    for a in cfg.alphas:
        br = best_response(toy.mdp, 0, [], toy.mechanism, a, toy.reward)
        ex = expected_externality(toy.mdp, 0, br, [toy.expert], toy.mechanism, [toy.reward])
        rows.append((a, same_behaviour(toy.mdp, br, toy.expert), ex, bound))
    summary = {"alpha_threshold": bound, "br_is_expert": {repr(float(a)): bool(e) for a, e, _, _ in rows}}
    return ExperimentResult({"incentives.csv": (("alpha", "br_is_expert", "externality", "bound"), rows)}, {}, summary)


# ------------------------------------------------------------------ irl recovery

@dataclass(frozen=True)
class IrlRecoverConfig(_Config):
    rows: int = 5
    cols: int = 6
    horizon: int = 40
    gamma_discount: float = 0.95
    regions: Any = field(default_factory=lambda: _to_lists(GRID_LAYOUT))
    start: Any = None
    omega: Any = (0.9, 1.0, 0.0)
    num_demos: int = 20
    demo_policy: str = "soft"
    demos_path: Any = None
    learning_rate: float = 0.1
    irl_max_iters: int = 2000
    grad_tolerance: float = 1e-5
    fail_on_nonconvergence: bool = False

    def validate(self):
        _grid_fields(self)
        _numbers("omega", self.omega, len(self.regions))
        _need(_is_int(self.num_demos) and self.num_demos >= 1, "num_demos", "must be a positive integer")
        _need(self.demo_policy in ("soft", "optimal"), "demo_policy", "must be 'soft' or 'optimal'")
        _need(self.demos_path is None or isinstance(self.demos_path, str), "demos_path", "must be a path or null")
        _irl_fields(self)

    @property
    def irl(self) -> IrlConfig:
        return IrlConfig(self.learning_rate, self.irl_max_iters, self.grad_tolerance)


def run_irl_recover(cfg: IrlRecoverConfig, seed=0, threads=1) -> ExperimentResult:
    from .io import read_trajectories

    mdp = _grid(cfg)
    if cfg.demos_path is not None:
        try:
            demos = read_trajectories(cfg.demos_path)
        except (OSError, ValueError) as e:
            raise ConfigError("demos_path", str(e)) from None
        if not demos:
            raise ConfigError("demos_path", "file holds no trajectories")
        for tr in demos:
            if len(tr) != mdp.horizon or tr.states.max() >= mdp.num_states or tr.actions.max(initial=0) >= mdp.num_actions:
                raise ConfigError("demos_path", "trajectories do not fit the configured gridworld")
    else:
        w = LinearReward(cfg.omega)
        policy = soft_value_iteration(mdp, w) if cfg.demo_policy == "soft" else value_iteration(mdp, w)[0]
        demos = [rollout(mdp, policy, ss) for ss in seed_sequence(seed).spawn(cfg.num_demos)]
    res = maxent_irl(mdp, demos, cfg.irl)
    r = res.reward.state_rewards(mdp)
    gap = float(np.linalg.norm(empirical_feature_counts(mdp, demos) - _soft_counts(mdp, res.reward.weights)))
    demo_rows = []
    for tr in demos:
        demo_rows += [(t, s, a) for t, (s, a) in enumerate(tr.steps)] + [(len(tr.actions), tr.final_state, -1)]
    summary = {"weights": res.reward.weights.tolist(), "converged": res.converged, "iterations": res.iterations,
               "feature_gap": gap}
    return ExperimentResult({"rewards.csv": (("state", "reward"), list(enumerate(r.tolist()))),
                             "demos.csv": (("t", "state", "action"), demo_rows)}, {}, summary, res.converged)


EXPERIMENTS = {
    "attack": (AttackConfig, run_attack),
    "bandit-regret": (BanditRegretConfig, run_bandit_regret),
    "dominance": (DominanceConfig, run_dominance),
    "manip-simplex": (ManipConfig, run_manip),
    "distortion": (DistortionConfig, run_distortion),
    "incentives": (IncentivesConfig, run_incentives),
    "irl-recover": (IrlRecoverConfig, run_irl_recover),
}
