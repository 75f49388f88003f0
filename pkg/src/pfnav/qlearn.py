"""Tabular Q-learning on the discretized grid.

The table is indexed by the cell of either the particle-filter estimate or the
raw observation; that choice is the only difference between the two arms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import estimator
from ._rng import stream
from .gridworld import GridConfig, GridWorld, Termination, discretize, transition

QTable = NDArray[np.float64]


@dataclass(frozen=True)
class LearnConfig:
    alpha: float = 0.001
    gamma: float = 0.999
    epsilon_start: float = 1.0
    epsilon_end: float = 1e-5
    episodes: int = 30_000
    particles: int = 500
    resample_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must be in [0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must be in [0, 1]")
        if not 0 < self.epsilon_end <= self.epsilon_start <= 1:
            raise ValueError("need 0 < epsilon_end <= epsilon_start <= 1")
        if self.episodes < 0 or self.particles < 1:
            raise ValueError("episodes must be >= 0 and particles >= 1")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    total_return: float
    success: bool
    steps: int
    epsilon: float
    reason: Termination = Termination.NONE


def new_table(grid: GridConfig = GridConfig()) -> QTable:
    return np.zeros((grid.cells, grid.cells, grid.n_actions))


def select_action(q: QTable, cell: tuple[int, int], epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    row = q[cell]
    if rng.random() < epsilon:
        return int(rng.integers(row.size))
    return int(row.argmax())


def update(
    q: QTable,
    cell: tuple[int, int],
    action: int,
    r: float,
    next_cell: tuple[int, int],
    terminal: bool,
    cfg: LearnConfig,
) -> QTable:
    """One in-place TD(0) backup of ``q[cell, action]``; returns ``q``."""
    target = r if terminal else r + cfg.gamma * q[next_cell].max()
    idx = (*cell, action)
    q[idx] += cfg.alpha * (target - q[idx])
    return q


def epsilon_at(episode: int, cfg: LearnConfig) -> float:
    """Geometric decay hitting epsilon_start at 0 and epsilon_end at the last episode."""
    if cfg.episodes <= 1:
        return cfg.epsilon_start
    frac = episode / (cfg.episodes - 1)
    return cfg.epsilon_start * (cfg.epsilon_end / cfg.epsilon_start) ** frac


def success_rate(records: list[EpisodeRecord], window: int | None = None) -> float:
    """Fraction of successful episodes among the last ``window`` records."""
    if not records:
        raise ValueError("no episode records")
    if window is None:
        window = len(records)
    if not 1 <= window <= len(records):
        raise ValueError(f"window {window} outside 1..{len(records)}")
    tail = records[-window:]
    return sum(r.success for r in tail) / window


def _grid_model(particles, action):
    return transition(particles, action)


def train(
    grid: GridConfig,
    cfg: LearnConfig,
    seed: int,
    use_filter: bool,
) -> tuple[QTable, list[EpisodeRecord]]:
    """Run ``cfg.episodes`` episodes and return the table and per-episode records.

    Each episode draws from its own streams keyed on (seed, purpose, episode):
    environment noise and exploration are shared between the filtered and
    unfiltered arms, the particle filter has a stream of its own.
    """
    env = GridWorld(grid)
    q = new_table(grid)
    records: list[EpisodeRecord] = []
    noise = estimator.NoiseSpec(grid.sigma_obs, grid.sigma_proc)
    exact_obs = grid.sigma_obs == 0
    prior = estimator.point_mass(grid.start)

    for ep in range(cfg.episodes):
        env_rng = stream(seed, "grid-env", ep)
        agent_rng = stream(seed, "grid-agent", ep)
        eps = epsilon_at(ep, cfg)
        s = env.reset()
        pf = None
        if use_filter and not exact_obs:
            pf = estimator.ParticleFilter(
                cfg.particles, _grid_model, noise, stream(seed, "grid-filter", ep), cfg.resample_threshold
            )
            belief = pf.reset(prior)
        else:
            # the start position is known exactly in both arms
            belief = s
        cell = discretize(belief, grid)
        total = 0.0
        while True:
            a = select_action(q, cell, eps, agent_rng)
            out = env.step(a, env_rng)
            total += out.reward
            if pf is not None:
                belief = pf.step(env.actions[a], out.observation)
            else:
                belief = out.observation
            next_cell = discretize(belief, grid)
            # a step-limit cut is a truncation, so it still bootstraps
            absorbing = out.reason in (Termination.BOUNDARY, Termination.FINAL_TARGET)
            update(q, cell, a, out.reward, next_cell, absorbing, cfg)
            cell = next_cell
            if out.terminal:
                break
        records.append(
            EpisodeRecord(ep, total, out.reason is Termination.FINAL_TARGET, env.t, eps, out.reason)
        )
    return q, records
