"""CSV readers and writers for the artifact formats."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .mdp import Trajectory


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def write_trajectories(path, trajectories: Sequence[Trajectory]) -> None:
    """Rows ``t,state,action``; the final state of each trajectory has action -1.
    A new trajectory starts whenever t returns to 0."""
    rows = []
    for tr in trajectories:
        for t, (s, a) in enumerate(tr.steps):
            rows.append((t, s, a))
        rows.append((len(tr.actions), tr.final_state, -1))
    write_table(path, ("t", "state", "action"), rows)


def read_trajectories(path) -> list[Trajectory]:
    header, rows = read_table(path)
    if header != ["t", "state", "action"]:
        raise ValueError(f"{path}: expected header t,state,action")
    out, states, actions = [], [], []
    for t, s, a in ((int(r[0]), int(r[1]), int(r[2])) for r in rows):
        if t == 0 and states:
            raise ValueError(f"{path}: trajectory ended without a final row")
        if t != len(states):
            raise ValueError(f"{path}: time index {t} out of sequence")
        states.append(s)
        if a < 0:
            out.append(Trajectory(np.array(states), np.array(actions, dtype=int)))
            states, actions = [], []
        else:
            actions.append(a)
    if states:
        raise ValueError(f"{path}: trailing trajectory without a final row")
    return out


def write_rewards(path, rewards: np.ndarray) -> None:
    write_table(path, ("state", "reward"), enumerate(np.asarray(rewards, dtype=float)))


def write_grid(path, grid: np.ndarray) -> None:
    """Plain numeric grid, one CSV row per grid row, no header."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for row in np.asarray(grid):
            w.writerow([fmt(x) for x in row])


def write_trace(path, trace) -> None:
    write_table(path, ("t", "chooser", "arm", "welfare"),
                ((t, c, a, w) for t, (c, a, w) in enumerate(trace.rounds())))


def write_regret_curve(path, curve: np.ndarray) -> None:
    write_table(path, ("t", "cum_regret"), enumerate(np.asarray(curve, dtype=float)))


def write_rankings(path, rankings: Sequence[Sequence[int]]) -> None:
    rows = [(h, k + 1, a) for h, r in enumerate(rankings) for k, a in enumerate(r)]
    write_table(path, ("human", "rank", "arm"), rows)


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
