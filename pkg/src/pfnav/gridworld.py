"""Continuous 12x12 navigation task with a wave-shaped chain of targets.

The agent moves by ``v * (cos th, sin th)`` plus Gaussian process noise and
only sees its position through additive Gaussian observation noise. Reward
shaping follows a sequence of 0.8x0.8 target boxes laid along a sinusoid from
(4, 4) to (11.4, 11.4).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True)
class GridConfig:
    size: float = 12.0
    cells: int = 51
    start: tuple[float, float] = (2.8, 2.8)
    sigma_obs: float = 0.05
    sigma_proc: float = 0.07
    max_steps: int = 100
    speeds: tuple[float, ...] = (0.4, 0.9, 1.4)
    headings: int = 8
    # wave path
    path_start: tuple[float, float] = (4.0, 4.0)
    path_end: tuple[float, float] = (11.4, 11.4)
    amplitude: float = 2.0
    frequency: float = 2.0
    spacing: float = 1.1
    node_half_extent: float = 0.4
    # reward shaping
    reward_boundary: float = -50_000.0
    reward_final: float = 8000.0
    guide_c: float = 100.0
    guide_eps: float = 0.1
    idle_kappa: float = 1.0
    idle_window: int = 3

    @property
    def n_actions(self) -> int:
        return self.headings * len(self.speeds)


@dataclass(frozen=True)
class GridAction:
    index: int
    speed: float
    heading_deg: float
    displacement: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        th = math.radians(self.heading_deg)
        object.__setattr__(self, "displacement", np.array([self.speed * math.cos(th), self.speed * math.sin(th)]))


def action_set(cfg: GridConfig) -> list[GridAction]:
    """All (speed, heading) pairs; index = heading_k * len(speeds) + speed_j."""
    out = []
    for k in range(cfg.headings):
        for j, v in enumerate(cfg.speeds):
            out.append(GridAction(len(out), v, k * 360.0 / cfg.headings))
    return out


class Termination(str, enum.Enum):
    NONE = "none"
    BOUNDARY = "boundary"
    FINAL_TARGET = "final_target"
    STEP_LIMIT = "step_limit"


@dataclass(frozen=True)
class StepOutcome:
    next_state: NDArray[np.float64]
    observation: NDArray[np.float64]
    reward: float
    reason: Termination = Termination.NONE

    @property
    def terminal(self) -> bool:
        return self.reason is not Termination.NONE


@dataclass(frozen=True)
class WavePath:
    nodes: NDArray[np.float64]
    node_half_extent: float = 0.4

    @property
    def final_node(self) -> NDArray[np.float64]:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.nodes)


def _wave_point(u: NDArray[np.float64], start, end, amplitude, frequency):
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    d = end - start
    normal = np.array([-d[1], d[0]]) / np.hypot(*d)
    offset = amplitude * np.sin(2 * np.pi * frequency * u)
    return start + u[:, None] * d + offset[:, None] * normal


def generate_wave_path(
    amplitude: float = 2.0,
    frequency: float = 2.0,
    spacing: float = 1.1,
    start: tuple[float, float] = (4.0, 4.0),
    end: tuple[float, float] = (11.4, 11.4),
    node_half_extent: float = 0.4,
    bounds: tuple[float, float] | None = (0.0, 12.0),
    resolution: int = 20_001,
) -> WavePath:
    """Sample a sinusoid between ``start`` and ``end`` at equal arc length.

    The arc length is integrated on a fine polyline; the node count is the
    integer closest to ``length / spacing`` so that both endpoints are nodes
    and every gap is the same length, as close to ``spacing`` as possible.
    Nodes are clipped into ``bounds``; at the default geometry one crest
    overshoots x = 12 by about 0.004.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    u = np.linspace(0.0, 1.0, resolution)
    pts = _wave_point(u, start, end, amplitude, frequency)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    n_gaps = max(1, round(arc[-1] / spacing))
    targets = np.linspace(0.0, arc[-1], n_gaps + 1)
    u_nodes = np.interp(targets, arc, u)
    nodes = _wave_point(u_nodes, start, end, amplitude, frequency)
    nodes[0] = start
    nodes[-1] = end
    if bounds is not None:
        nodes = np.clip(nodes, *bounds)
    return WavePath(nodes, node_half_extent)


def path_from_config(cfg: GridConfig) -> WavePath:
    return generate_wave_path(
        cfg.amplitude,
        cfg.frequency,
        cfg.spacing,
        cfg.path_start,
        cfg.path_end,
        cfg.node_half_extent,
        bounds=(0.0, cfg.size),
    )


def in_bounds(s: ArrayLike, size: float = 12.0) -> bool:
    x, y = s
    return 0.0 <= x <= size and 0.0 <= y <= size


def in_box(s: ArrayLike, center: ArrayLike, half_extent: float) -> bool:
    return abs(s[0] - center[0]) <= half_extent and abs(s[1] - center[1]) <= half_extent


def transition(states: NDArray[np.float64], action: GridAction) -> NDArray[np.float64]:
    """Noise-free kinematics; works on a single state or an (N, 2) batch."""
    return states + action.displacement


def observe(s: ArrayLike, rng: np.random.Generator, sigma: float) -> NDArray[np.float64]:
    # not clamped: observations may fall outside the domain
    return np.asarray(s, dtype=float) + sigma * rng.standard_normal(2)


def discretize(s: ArrayLike, cfg: GridConfig = GridConfig()) -> tuple[int, int]:
    """Nearest of ``cfg.cells`` evenly spaced points per axis (clamped)."""
    top = cfg.cells - 1
    scale = top / cfg.size
    i = min(max(math.floor(s[0] * scale + 0.5), 0), top)
    j = min(max(math.floor(s[1] * scale + 0.5), 0), top)
    return i, j


def cell_center(cell: tuple[int, int], cfg: GridConfig = GridConfig()) -> NDArray[np.float64]:
    return np.asarray(cell, dtype=float) * cfg.size / (cfg.cells - 1)


def reward(
    next_state: ArrayLike,
    progress: int,
    idle: int,
    path: WavePath,
    cfg: GridConfig,
) -> tuple[float, str]:
    """Shaped reward for landing in ``next_state``.

    ``progress`` is the index of the next target node, ``idle`` the number of
    consecutive earlier steps without a hit. Returns (reward, event) where
    event is one of boundary, final, node, idle, none.
    """
    if not in_bounds(next_state, cfg.size):
        return cfg.reward_boundary, "boundary"
    half = path.node_half_extent
    if in_box(next_state, path.final_node, half):
        return cfg.reward_final, "final"
    if progress < len(path) - 1 and in_box(next_state, path.nodes[progress], half):
        following = path.nodes[progress + 1]
        d_next = math.hypot(next_state[0] - following[0], next_state[1] - following[1])
        return cfg.guide_c / (d_next + cfg.guide_eps), "node"
    if idle + 1 >= cfg.idle_window:
        fx, fy = path.final_node
        dist = math.hypot(next_state[0] - fx, next_state[1] - fy)
        return -cfg.idle_kappa * dist, "idle"
    return 0.0, "none"


@dataclass
class GridWorld:
    """One episode's mutable environment state."""

    cfg: GridConfig = field(default_factory=GridConfig)
    path: WavePath | None = None

    def __post_init__(self) -> None:
        if self.path is None:
            self.path = path_from_config(self.cfg)
        self.actions = action_set(self.cfg)
        self.reset()

    def reset(self) -> NDArray[np.float64]:
        self.state = np.array(self.cfg.start, dtype=float)
        self.progress = 0
        self.idle = 0
        self.t = 0
        return self.state.copy()

    def step(self, action: GridAction | int, rng: np.random.Generator) -> StepOutcome:
        if not isinstance(action, GridAction):
            action = self.actions[action]
        cfg = self.cfg
        nxt = transition(self.state, action) + cfg.sigma_proc * rng.standard_normal(2)
        r, event = reward(nxt, self.progress, self.idle, self.path, cfg)
        if event == "node":
            self.progress += 1
            self.idle = 0
        else:
            self.idle += 1
        self.t += 1
        if event == "boundary":
            reason = Termination.BOUNDARY
        elif event == "final":
            reason = Termination.FINAL_TARGET
        elif self.t >= cfg.max_steps:
            reason = Termination.STEP_LIMIT
        else:
            reason = Termination.NONE
        z = observe(nxt, rng, cfg.sigma_obs)
        self.state = nxt
        return StepOutcome(nxt, z, r, reason)
