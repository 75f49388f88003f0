"""Speciation, reproduction and the generational loop."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from .._rng import stream
from .genome import (
    Genome,
    InnovationRegistry,
    MutationRates,
    compatibility_distance,
    crossover,
    initial_genome,
    mutate,
)


@dataclass(frozen=True)
class EvoConfig:
    population: int = 30
    generations: int = 20
    max_generations: int = 40
    elitism: int = 3
    survival_threshold: float = 0.2
    compat_threshold: float = 2.0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 0.4
    reenable: float = 0.25
    max_stagnation: int = 15
    activation: str = "tanh"
    rates: MutationRates = field(default_factory=MutationRates)

    def __post_init__(self) -> None:
        if self.population < 1:
            raise ValueError("population must be >= 1")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")
        if not 0 <= self.generations <= self.max_generations:
            raise ValueError(f"generations must be in [0, {self.max_generations}]")
        if self.activation != "tanh":
            raise ValueError("only tanh activation is supported")
        probs = [self.survival_threshold, self.reenable]
        probs += [getattr(self.rates, k) for k in ("conn_add", "conn_delete", "node_add", "node_delete",
                                                   "weight_mutate", "bias_mutate", "weight_replace")]
        if any(not 0 <= p <= 1 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")


@dataclass
class Species:
    key: int
    representative: Genome
    members: list[Genome] = field(default_factory=list)
    best_fitness: float = -math.inf
    last_improved: int = 0
    generation: int = 0

    @property
    def staleness(self) -> int:
        """Generations since the species last improved its best fitness."""
        return self.generation - self.last_improved


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    species_count: int


@dataclass
class EvolutionResult:
    stats: list[GenerationStats]
    champion: Genome
    population: list[Genome]


def speciate(
    population: list[Genome],
    previous: list[Species],
    cfg: EvoConfig,
    rng: np.random.Generator,
    generation: int = 0,
) -> list[Species]:
    """Assign each genome to the first species whose representative is within threshold."""
    species = []
    next_key = max((s.key for s in previous), default=-1) + 1
    for old in previous:
        rep = old.members[rng.integers(len(old.members))] if old.members else old.representative
        species.append(Species(old.key, rep, [], old.best_fitness, old.last_improved, generation))
    for g in population:
        for s in species:
            if compatibility_distance(g, s.representative, cfg.c1, cfg.c2, cfg.c3) <= cfg.compat_threshold:
                s.members.append(g)
                break
        else:
            species.append(Species(next_key, g, [g], -math.inf, generation, generation))
            next_key += 1
    species = [s for s in species if s.members]
    for s in species:
        top = max(m.fitness for m in s.members) if all(m.fitness is not None for m in s.members) else None
        if top is not None and top > s.best_fitness:
            s.best_fitness = top
            s.last_improved = generation
    return species


def _ranked(genomes: Iterable[Genome]) -> list[Genome]:
    # stable: equal fitness keeps population order
    return sorted(genomes, key=lambda g: -g.fitness)


def allocate(shares: list[float], total: int) -> list[int]:
    """Split ``total`` slots proportionally to ``shares`` (largest remainder)."""
    if total <= 0 or not shares:
        return [0] * len(shares)
    weight = sum(shares)
    if weight <= 0:
        shares = [1.0] * len(shares)
        weight = float(len(shares))
    exact = [total * s / weight for s in shares]
    counts = [math.floor(x) for x in exact]
    order = sorted(range(len(shares)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts


def reproduce(
    species: list[Species],
    registry: InnovationRegistry,
    cfg: EvoConfig,
    rng: np.random.Generator,
) -> list[Genome]:
    """Next population: global elites copied unchanged plus offspring of each species.

    Offspring quotas are proportional to species mean fitness (shifted to be
    non-negative); elites count against their own species' quota.
    """
    members = [g for s in species for g in s.members]
    if not members:
        raise ValueError("cannot reproduce from empty species")
    ranked = _ranked(members)
    elites = ranked[: cfg.elitism]
    champion = ranked[0]
    alive = [s for s in species if s.staleness < cfg.max_stagnation or any(m is champion for m in s.members)]

    floor = min(g.fitness for s in alive for g in s.members)
    shift = -floor if floor < 0 else 0.0
    shares = [sum(g.fitness + shift for g in s.members) / len(s.members) for s in alive]
    quota = allocate(shares, cfg.population)
    for e in elites:
        owner = next((i for i, s in enumerate(alive) if any(m is e for m in s.members)), None)
        if owner is None or quota[owner] == 0:
            owner = max(range(len(alive)), key=lambda i: quota[i])
        quota[owner] -= 1

    registry.new_generation()
    nxt = [e.copy() for e in elites]
    for s, n_children in zip(alive, quota):
        if n_children <= 0:
            continue
        pool = _ranked(s.members)
        parents = pool[: max(1, math.ceil(cfg.survival_threshold * len(pool)))]
        for _ in range(n_children):
            p1 = parents[rng.integers(len(parents))]
            p2 = parents[rng.integers(len(parents))]
            if p1 is p2:
                child = p1.copy()
            else:
                fitter, other = (p1, p2) if p1.fitness >= p2.fitness else (p2, p1)
                child = crossover(fitter, other, rng, cfg.reenable)
            nxt.append(mutate(child, registry, cfg.rates, rng))
    return nxt


def evolve(
    fitness: Callable[[Genome], float],
    cfg: EvoConfig,
    seed: int,
    n_inputs: int,
    n_outputs: int,
    generations: int | None = None,
    stop: Callable[[Genome], bool] | None = None,
    map_fn: Callable = map,
) -> EvolutionResult:
    """Run evaluate -> speciate -> reproduce for ``generations`` generations.

    One stats row is recorded per evaluated generation. Genomes carried over
    as elites keep their fitness, so with a deterministic ``fitness`` the best
    fitness never decreases. ``stop`` is checked against the champion after
    each generation. ``map_fn`` can be an executor's map for parallel
    evaluation.
    """
    generations = cfg.generations if generations is None else generations
    rng = stream(seed, "neat")
    registry = InnovationRegistry(n_inputs + n_outputs, 0)
    pop = [initial_genome(n_inputs, n_outputs, registry, rng, cfg.rates.init_range) for _ in range(cfg.population)]
    species: list[Species] = []
    stats: list[GenerationStats] = []

    def evaluate(genomes: list[Genome]) -> None:
        todo = [g for g in genomes if g.fitness is None]
        for g, f in zip(todo, map_fn(fitness, todo)):
            g.fitness = float(f)

    evaluate(pop)
    champion = _ranked(pop)[0]
    for gen in range(generations):
        if gen > 0:
            pop = reproduce(species, registry, cfg, rng)
            evaluate(pop)
        species = speciate(pop, species, cfg, rng, gen)
        best = _ranked(pop)[0]
        if best.fitness > champion.fitness or gen == 0:
            champion = best
        stats.append(
            GenerationStats(gen, best.fitness, float(np.mean([g.fitness for g in pop])), len(species))
        )
        if stop is not None and stop(champion):
            break
    return EvolutionResult(stats, champion, pop)
