"""Bootstrap particle filter.

The filter approximates the posterior over a hidden state with a weighted
ensemble. Each cycle pushes every particle through a transition model with
additive Gaussian process noise, reweights by an isotropic Gaussian
observation likelihood, resamples (systematic) once the effective sample size
drops below a fraction of N, and reports the weighted mean.

All operations are pure functions over :class:`ParticleSet` values; the
:class:`ParticleFilter` class only bundles them with an injected RNG.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

log = logging.getLogger(__name__)

# model(particles (N, D), action) -> particles (N, D)
TransitionModel = Callable[[NDArray[np.float64], object], NDArray[np.float64]]
# prior(rng, n) -> (N, D) or (N,)
PriorSampler = Callable[[np.random.Generator, int], ArrayLike]

UNDERFLOW_FLOOR = 1e-300


@dataclass(frozen=True)
class ParticleSet:
    particles: NDArray[np.float64]
    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.particles.ndim != 2:
            raise ValueError("particles must be a 2-D array (N, D)")
        if self.weights.shape != (self.particles.shape[0],):
            raise ValueError("weights must have shape (N,)")

    @property
    def n(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Standard deviations (environment units), scalar or per component."""

    observation_sigma: float | tuple[float, ...] = 0.05
    process_sigma: float | tuple[float, ...] = 0.07

    def __post_init__(self) -> None:
        for name in ("observation_sigma", "process_sigma"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be non-negative")
        # cached for the hot loop
        obs = np.asarray(self.observation_sigma, dtype=float)
        proc = np.asarray(self.process_sigma, dtype=float)
        object.__setattr__(self, "_obs", obs)
        object.__setattr__(self, "_proc", proc)
        object.__setattr__(self, "_obs_positive", bool(np.all(obs > 0)))
        object.__setattr__(self, "_proc_active", bool(np.any(proc > 0)))


def point_mass(state: ArrayLike) -> PriorSampler:
    state = np.atleast_1d(np.asarray(state, dtype=float))

    def sample(rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        return np.tile(state, (n, 1))

    return sample


def gaussian_prior(mean: ArrayLike, std: float | ArrayLike) -> PriorSampler:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    std = np.asarray(std, dtype=float)

    def sample(rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        return mean + std * rng.standard_normal((n, mean.size))

    return sample


def init(n: int, prior_sampler: PriorSampler, rng: np.random.Generator) -> ParticleSet:
    """Draw ``n`` particles from the prior with uniform weights."""
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    particles = np.asarray(prior_sampler(rng, n), dtype=float)
    if particles.ndim == 1:
        particles = particles[:, None]
    if particles.shape[0] != n:
        raise ValueError(f"prior returned {particles.shape[0]} particles, expected {n}")
    return ParticleSet(particles.copy(), np.full(n, 1.0 / n))


def predict(
    pset: ParticleSet,
    action: object,
    model: TransitionModel,
    noise: NoiseSpec,
    rng: np.random.Generator,
) -> ParticleSet:
    moved = np.asarray(model(pset.particles, action), dtype=float)
    if noise._proc_active:
        moved = moved + noise._proc * rng.standard_normal(moved.shape)
    return ParticleSet(moved, pset.weights)


def _likelihood_weights(
    pset: ParticleSet, z: ArrayLike, noise: NoiseSpec
) -> tuple[NDArray[np.float64], bool]:
    if not noise._obs_positive:
        raise ValueError("observation_sigma must be > 0 to update weights")
    resid = (pset.particles - z) / noise._obs
    resid *= resid
    w = pset.weights * np.exp(-0.5 * resid.sum(axis=1))
    total = w.sum()
    if not total >= UNDERFLOW_FLOOR:
        return np.full(pset.n, 1.0 / pset.n), True
    return w / total, False


def update_weights(pset: ParticleSet, z: ArrayLike, noise: NoiseSpec) -> ParticleSet:
    """Multiply weights by exp(-|z - s|^2 / 2 sigma^2) and renormalize.

    If every factor underflows the weights fall back to uniform.
    """
    w, underflow = _likelihood_weights(pset, z, noise)
    if underflow:
        log.debug("likelihood underflow; weights reset to uniform")
    return ParticleSet(pset.particles, w)


def effective_sample_size(pset: ParticleSet) -> float:
    return float(1.0 / np.dot(pset.weights, pset.weights))


def systematic_indices(weights: NDArray[np.float64], offset: float) -> NDArray[np.intp]:
    """Indices selected by systematic resampling for a given offset in [0, 1)."""
    n = weights.size
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    positions = (np.arange(n) + offset) / n
    return cumulative.searchsorted(positions, side="right")


def resample(pset: ParticleSet, rng: np.random.Generator) -> ParticleSet:
    idx = systematic_indices(pset.weights, rng.random())
    return ParticleSet(pset.particles.take(idx, axis=0), np.full(pset.n, 1.0 / pset.n))


def estimate(pset: ParticleSet) -> NDArray[np.float64]:
    return pset.weights @ pset.particles


class ParticleFilter:
    """Stateful wrapper running predict/update/resample/estimate cycles.

    Resampling fires when ESS < ``resample_threshold * N``. ``underflows``
    counts cycles where the likelihood collapsed and weights were reset.
    """

    def __init__(
        self,
        n: int,
        model: TransitionModel,
        noise: NoiseSpec,
        rng: np.random.Generator,
        resample_threshold: float = 0.5,
    ) -> None:
        if n < 1:
            raise ValueError(f"particle count must be >= 1, got {n}")
        self.n = n
        self.model = model
        self.noise = noise
        self.rng = rng
        self.resample_threshold = resample_threshold
        self.pset: ParticleSet | None = None
        self.underflows = 0
        self.resamples = 0

    def reset(self, prior_sampler: PriorSampler) -> NDArray[np.float64]:
        self.pset = init(self.n, prior_sampler, self.rng)
        return estimate(self.pset)

    def step(self, action: object, z: ArrayLike) -> NDArray[np.float64]:
        if self.pset is None:
            raise RuntimeError("filter used before reset()")
        pset = predict(self.pset, action, self.model, self.noise, self.rng)
        w, underflow = _likelihood_weights(pset, z, self.noise)
        self.underflows += underflow
        pset = ParticleSet(pset.particles, w)
        if 1.0 / np.dot(w, w) < self.resample_threshold * self.n:
            pset = resample(pset, self.rng)
            self.resamples += 1
        self.pset = pset
        return estimate(pset)
