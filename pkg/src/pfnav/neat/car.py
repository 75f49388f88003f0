"""Car-driving fitness for NEAT controllers.

A controller sees the five radar distances (filtered or raw) scaled by the
radar range and picks one of four actions by argmax. Fitness accumulates
``v / speed_norm`` per step plus a bonus for every angular checkpoint gate
passed around the track's gate centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

from .._rng import stream
from ..carworld import CarAction, CarConfig, RadarArray, Track, _inside_free, step
from .genome import Genome, Network
from .population import EvoConfig, EvolutionResult, evolve

ACTIONS = (CarAction.TURN_LEFT, CarAction.TURN_RIGHT, CarAction.SLOW_DOWN, CarAction.SPEED_UP)


@dataclass(frozen=True)
class FitnessConfig:
    speed_norm: float = 20.0
    checkpoint_bonus: float = 50.0
    gates: int = 16


@dataclass(frozen=True)
class Rollout:
    fitness: float
    steps: int
    checkpoints: int
    crashed: bool


def action_from_outputs(outputs) -> CarAction:
    """Argmax over the four outputs; ties go to the lowest index."""
    best = 0
    for i in range(1, len(ACTIONS)):
        if outputs[i] > outputs[best]:
            best = i
    return ACTIONS[best]


def rollout(
    genome: Genome,
    track: Track,
    car_cfg: CarConfig,
    fit_cfg: FitnessConfig,
    filter_enabled: bool,
    seed: int,
) -> Rollout:
    net = Network(genome)
    filter_rng = stream(seed, "car-filter") if filter_enabled else None
    radars = RadarArray(track, car_cfg, stream(seed, "car-noise"), filter_rng)
    car = track.spawn_state(car_cfg.start_speed)
    cx, cy = track.gate_center
    gate = 2 * math.pi / fit_cfg.gates
    angle = math.atan2(car.y - cy, car.x - cx)
    progress = best = 0.0
    fitness = 0.0
    crashed = False
    steps = 0
    scale = car_cfg.radar_range
    for steps in range(1, car_cfg.max_steps + 1):
        _, _, seen = radars.sense(car)
        action = action_from_outputs(net.activate([d / scale for d in seen]))
        car, crashed = step(track, car, action, car_cfg)
        fitness += car.v / fit_cfg.speed_norm
        # a centre inside a wall only happens on a crash the corners missed
        crashed = crashed or not _inside_free(track, car.x, car.y)
        if crashed:
            break
        new_angle = math.atan2(car.y - cy, car.x - cx)
        progress += (new_angle - angle + math.pi) % (2 * math.pi) - math.pi
        angle = new_angle
        if progress > best:
            passed = math.floor(progress / gate) - math.floor(best / gate)
            fitness += fit_cfg.checkpoint_bonus * passed
            best = progress
    return Rollout(fitness, steps, max(0, math.floor(best / gate)), crashed)


def evaluate_fitness(
    genome: Genome,
    track: Track,
    car_cfg: CarConfig,
    fit_cfg: FitnessConfig = FitnessConfig(),
    filter_enabled: bool = False,
    seed: int = 0,
) -> float:
    return rollout(genome, track, car_cfg, fit_cfg, filter_enabled, seed).fitness


def evolve_car(
    track: Track,
    car_cfg: CarConfig,
    evo_cfg: EvoConfig,
    filter_enabled: bool,
    seed: int,
    fit_cfg: FitnessConfig = FitnessConfig(),
    map_fn=map,
) -> EvolutionResult:
    """Evolve radar-driven controllers.

    Every genome is scored in the same seeded noise scenario, so a genome's
    fitness depends on its own behaviour only and elites keep their score.
    """
    fitness = partial(
        evaluate_fitness, track=track, car_cfg=car_cfg, fit_cfg=fit_cfg, filter_enabled=filter_enabled, seed=seed
    )
    return evolve(fitness, evo_cfg, seed, len(car_cfg.radar_angles), len(ACTIONS), map_fn=map_fn)
