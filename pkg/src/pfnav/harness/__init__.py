from .config import ConfigError, ExperimentConfig, parse_config, parse_text
from .experiments import run_car_experiment, run_grid_experiment, write_csv
from .metrics import PhaseStats, phase_bounds, phase_stats, sliding_window_avg

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PhaseStats",
    "parse_config",
    "parse_text",
    "phase_bounds",
    "phase_stats",
    "run_car_experiment",
    "run_grid_experiment",
    "sliding_window_avg",
    "write_csv",
]
