"""Flat ``key=value`` experiment configuration.

Blank lines and ``#`` comments are ignored. Every key is optional; missing
keys keep the defaults of the underlying dataclasses. Unknown keys and values
that do not parse as the key's type raise :class:`ConfigError` naming the key.

Example::

    experiment = grid
    seeds = 0,1,2
    grid.episodes = 5000
    grid.sigma_obs = 0.05
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from ..carworld import CarConfig
from ..gridworld import GridConfig
from ..neat.car import FitnessConfig
from ..neat.genome import MutationRates
from ..neat.population import EvoConfig
from ..qlearn import LearnConfig

FILTER_CHOICES = ("on", "off", "both")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "grid"
    filter: str = "both"
    seeds: tuple[int, ...] = (0,)
    output: str = "results"
    workers: int = 1
    grid: GridConfig = field(default_factory=GridConfig)
    learn: LearnConfig = field(default_factory=LearnConfig)
    car: CarConfig = field(default_factory=CarConfig)
    track: str = "oval"
    sigma_dist_levels: tuple[float, ...] = (0.0,)
    evo: EvoConfig = field(default_factory=EvoConfig)
    fitness: FitnessConfig = field(default_factory=FitnessConfig)

    @property
    def arms(self) -> tuple[bool, ...]:
        """Filter settings to run, unfiltered first."""
        return {"on": (True,), "off": (False,), "both": (False, True)}[self.filter]


# config key -> (section, attribute); section None means a top-level field
_TOP = {k: (None, k) for k in ("experiment", "filter", "seeds", "output", "workers")}
_GRID = {
    "grid.sigma_obs": ("grid", "sigma_obs"),
    "grid.sigma_proc": ("grid", "sigma_proc"),
    "grid.max_steps": ("grid", "max_steps"),
    "grid.path.amplitude": ("grid", "amplitude"),
    "grid.path.frequency": ("grid", "frequency"),
    "grid.path.spacing": ("grid", "spacing"),
    "grid.reward.boundary": ("grid", "reward_boundary"),
    "grid.reward.final": ("grid", "reward_final"),
    "grid.reward.guide_c": ("grid", "guide_c"),
    "grid.reward.idle_kappa": ("grid", "idle_kappa"),
    "grid.episodes": ("learn", "episodes"),
    "grid.alpha": ("learn", "alpha"),
    "grid.gamma": ("learn", "gamma"),
    "grid.epsilon_start": ("learn", "epsilon_start"),
    "grid.epsilon_end": ("learn", "epsilon_end"),
    "grid.particles": ("learn", "particles"),
    "grid.resample_threshold": ("learn", "resample_threshold"),
}
_CAR = {
    f"car.{k}": ("car", k)
    for k in ("sigma_theta", "max_steps", "turn_deg", "speed_step", "speed_min", "speed_max",
              "start_speed", "radar_range", "particles", "process_sigma")
}
_CAR["car.sigma_dist"] = (None, "sigma_dist_levels")
_CAR["car.track"] = (None, "track")
_NEAT = {
    f"neat.{k}": ("evo", k)
    for k in ("population", "generations", "max_generations", "elitism", "survival_threshold",
              "compat_threshold", "c1", "c2", "c3", "reenable", "max_stagnation", "activation")
}
_NEAT.update({f"neat.{f.name}": ("rates", f.name) for f in dataclasses.fields(MutationRates)})
_NEAT.update({f"neat.fitness.{f.name}": ("fitness", f.name) for f in dataclasses.fields(FitnessConfig)})

KEYS: dict[str, tuple[str | None, str]] = {**_TOP, **_GRID, **_CAR, **_NEAT}


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(key: str, text: str, like: object):
    try:
        if isinstance(like, bool):
            return _parse_bool(text)
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, tuple):
            items = [p.strip() for p in text.split(",") if p.strip()]
            if not items:
                raise ValueError("empty list")
            kind = type(like[0]) if like else float
            return tuple(kind(p) for p in items)
        return text
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from None


def _default_of(key: str, section: str | None, attr: str) -> object:
    base = {
        None: ExperimentConfig(),
        "grid": GridConfig(),
        "learn": LearnConfig(),
        "car": CarConfig(),
        "evo": EvoConfig(),
        "rates": MutationRates(),
        "fitness": FitnessConfig(),
    }[section]
    return getattr(base, attr)


def config_from_pairs(pairs: dict[str, str]) -> ExperimentConfig:
    """Build and validate a config from raw ``key -> text`` pairs."""
    values: dict[str | None, dict[str, object]] = {}
    for key, text in pairs.items():
        if key not in KEYS:
            raise ConfigError(f"{key}: unknown key")
        section, attr = KEYS[key]
        values.setdefault(section, {})[attr] = _coerce(key, text, _default_of(key, section, attr))

    def build(cls, section: str):
        try:
            return cls(**values.get(section, {}))
        except ValueError as exc:
            keys = [k for k, (s, _) in KEYS.items() if s == section and k in pairs]
            raise ConfigError(f"{', '.join(keys) or section}: {exc}") from None

    rates = build(MutationRates, "rates")
    evo_values = values.setdefault("evo", {})
    evo_values["rates"] = rates
    top = dict(values.get(None, {}))
    try:
        cfg = ExperimentConfig(
            grid=build(GridConfig, "grid"),
            learn=build(LearnConfig, "learn"),
            car=build(CarConfig, "car"),
            evo=build(EvoConfig, "evo"),
            fitness=build(FitnessConfig, "fitness"),
            **top,
        )
    except TypeError as exc:  # pragma: no cover - keys are checked above
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.experiment not in ("grid", "car"):
        raise ConfigError(f"experiment: expected 'grid' or 'car', got {cfg.experiment!r}")
    if cfg.filter not in FILTER_CHOICES:
        raise ConfigError(f"filter: expected one of {FILTER_CHOICES}, got {cfg.filter!r}")
    if not cfg.seeds or any(s < 0 for s in cfg.seeds):
        raise ConfigError("seeds: need at least one non-negative seed")
    if cfg.workers < 1:
        raise ConfigError("workers: must be >= 1")
    if not cfg.sigma_dist_levels or any(s < 0 for s in cfg.sigma_dist_levels):
        raise ConfigError("car.sigma_dist: levels must be non-negative")
    if cfg.car.sigma_theta < 0:
        raise ConfigError("car.sigma_theta: must be non-negative")
    if cfg.track != "oval" and not os.path.isfile(cfg.track):
        raise ConfigError(f"car.track: no such file {cfg.track!r}")
    if cfg.fitness.gates < 1:
        raise ConfigError("neat.fitness.gates: must be >= 1")


def parse_text(text: str, source: str = "<string>") -> ExperimentConfig:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        if key in pairs:
            raise ConfigError(f"{key}: duplicate key ({source}:{lineno})")
        pairs[key] = value.strip()
    return config_from_pairs(pairs)


def parse_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {os.fspath(path)!r}: {exc.strerror}") from None
    return parse_text(text, os.fspath(path))
