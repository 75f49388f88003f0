"""Experiment runners that fan out over seeds and arms and write CSV files.

Output layout under ``cfg.output``::

    grid_seed<S>_<arm>.csv           episode,return,success,epsilon,steps
    grid_seed<S>_<arm>_window50.csv  episode,return_avg50,success_avg50
    grid_summary.csv                 one row per (seed, arm)
    car_seed<S>_<arm>_sd<D>.csv      generation,best_fitness,mean_fitness,species_count
    car_summary.csv                  one row per (seed, arm, sigma_dist)

``<arm>`` is ``filtered`` or ``unfiltered``. Floats are written with
``repr`` so equal runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor

from ..carworld import load_track
from ..neat.car import evolve_car
from ..qlearn import EpisodeRecord, success_rate, train
from .config import ExperimentConfig
from .metrics import phase_bounds, phase_stats, sliding_window_avg

log = logging.getLogger(__name__)

GRID_EPISODE_HEADER = ("episode", "return", "success", "epsilon", "steps")
GRID_WINDOW_HEADER = ("episode", "return_avg50", "success_avg50")
GRID_SUMMARY_HEADER = (
    "seed", "arm", "episodes", "success_rate_final", "success_window",
    "early_mean", "early_variance", "early_cv", "late_mean", "late_variance", "late_cv",
)
CAR_GENERATION_HEADER = ("generation", "best_fitness", "mean_fitness", "species_count")
CAR_SUMMARY_HEADER = (
    "seed", "arm", "sigma_dist", "sigma_theta", "generations",
    "final_best_fitness", "final_mean_fitness", "champion_hidden", "champion_connections",
)
SUCCESS_WINDOW = 1000


def arm_name(filter_enabled: bool) -> str:
    return "filtered" if filter_enabled else "unfiltered"


def write_csv(path: str, header: tuple[str, ...], rows: Iterable[tuple]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"row arity {len(row)} does not match header of {len(header)}")
                writer.writerow(row)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def _fan_out(fn: Callable, jobs: list[tuple], workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# -- grid ---------------------------------------------------------------------


def _grid_job(cfg: ExperimentConfig, seed: int, filter_enabled: bool) -> list[EpisodeRecord]:
    log.info("grid seed=%d arm=%s episodes=%d", seed, arm_name(filter_enabled), cfg.learn.episodes)
    _, records = train(cfg.grid, cfg.learn, seed, filter_enabled)
    return records


def grid_summary_row(seed: int, filter_enabled: bool, records: list[EpisodeRecord]) -> tuple:
    n = len(records)
    if n == 0:
        nan = float("nan")
        return (seed, arm_name(filter_enabled), 0, nan, 0, nan, nan, nan, nan, nan, nan)
    window = min(SUCCESS_WINDOW, n)
    returns = [r.total_return for r in records]
    (e0, e1), (l0, l1) = phase_bounds(n)
    early = phase_stats(returns, e0, e1, "early")
    late = phase_stats(returns, l0, l1, "late")
    return (
        seed, arm_name(filter_enabled), n, success_rate(records, window), window,
        early.mean, early.variance, early.cv, late.mean, late.variance, late.cv,
    )


def run_grid_experiment(cfg: ExperimentConfig) -> list[tuple]:
    """Train every (seed, arm) pair, write the CSVs, return the summary rows."""
    os.makedirs(cfg.output, exist_ok=True)
    jobs = [(cfg, seed, arm) for seed in cfg.seeds for arm in cfg.arms]
    results = _fan_out(_grid_job, jobs, cfg.workers)
    summary = []
    for (_, seed, arm), records in zip(jobs, results):
        stem = os.path.join(cfg.output, f"grid_seed{seed}_{arm_name(arm)}")
        write_csv(
            stem + ".csv",
            GRID_EPISODE_HEADER,
            ((r.episode, r.total_return, int(r.success), r.epsilon, r.steps) for r in records),
        )
        if records:
            ret = sliding_window_avg([r.total_return for r in records], 50)
            succ = sliding_window_avg([float(r.success) for r in records], 50)
            write_csv(stem + "_window50.csv", GRID_WINDOW_HEADER,
                      ((i, float(a), float(b)) for i, (a, b) in enumerate(zip(ret, succ))))
        summary.append(grid_summary_row(seed, arm, records))
    write_csv(os.path.join(cfg.output, "grid_summary.csv"), GRID_SUMMARY_HEADER, summary)
    return summary


# -- car ----------------------------------------------------------------------


def _car_job(cfg: ExperimentConfig, seed: int, filter_enabled: bool, sigma_dist: float) -> tuple[list, tuple]:
    log.info("car seed=%d arm=%s sigma_dist=%g", seed, arm_name(filter_enabled), sigma_dist)
    track = load_track(cfg.track, cfg.car.car_size)
    car_cfg = dataclasses.replace(cfg.car, sigma_dist=sigma_dist)
    result = evolve_car(track, car_cfg, cfg.evo, filter_enabled, seed, cfg.fitness)
    rows = [(s.generation, s.best_fitness, s.mean_fitness, s.species_count) for s in result.stats]
    champ = result.champion
    last = result.stats[-1] if result.stats else None
    nan = float("nan")
    summary = (
        seed, arm_name(filter_enabled), sigma_dist, car_cfg.sigma_theta, len(result.stats),
        last.best_fitness if last else champ.fitness, last.mean_fitness if last else nan,
        len(champ.hidden_ids()), len(champ.enabled_edges()),
    )
    return rows, summary


def run_car_experiment(cfg: ExperimentConfig) -> list[tuple]:
    """Evolve every (seed, arm, sigma_dist) triple, write the CSVs, return the summary rows."""
    os.makedirs(cfg.output, exist_ok=True)
    jobs = [(cfg, seed, arm, sd) for seed in cfg.seeds for arm in cfg.arms for sd in cfg.sigma_dist_levels]
    results = _fan_out(_car_job, jobs, cfg.workers)
    summary = []
    for (_, seed, arm, sd), (rows, row) in zip(jobs, results):
        path = os.path.join(cfg.output, f"car_seed{seed}_{arm_name(arm)}_sd{sd:g}.csv")
        write_csv(path, CAR_GENERATION_HEADER, rows)
        summary.append(row)
    write_csv(os.path.join(cfg.output, "car_summary.csv"), CAR_SUMMARY_HEADER, summary)
    return summary
