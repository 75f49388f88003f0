"""Command line entry point.

Exit codes: 0 on success, 2 for configuration errors, 1 for runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import FILTER_CHOICES, ConfigError, ExperimentConfig, parse_config, validate
from .experiments import run_car_experiment, run_grid_experiment


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pfnav", description="Particle-filtered Q-learning and NEAT car experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file (defaults if omitted)")
        p.add_argument("--filter", choices=FILTER_CHOICES, help="which arms to run")
        p.add_argument("--seed", type=_int_list, help="comma-separated seeds")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="parallel worker processes")

    common(sub.add_parser("grid-train", help="tabular Q-learning on the wave-path grid"))
    car = sub.add_parser("car-evolve", help="NEAT controllers on the radar car track")
    common(car)
    car.add_argument("--sigma-dist", type=_float_list, help="comma-separated radar distance noise levels")
    v = sub.add_parser("validate-config", help="parse a config and print the resolved values")
    v.add_argument("--config", required=True)
    return parser


def _resolve(args: argparse.Namespace, experiment: str) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    overrides: dict[str, object] = {"experiment": experiment}
    if args.filter:
        overrides["filter"] = args.filter
    if args.seed is not None:
        overrides["seeds"] = args.seed
    if args.out:
        overrides["output"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if getattr(args, "sigma_dist", None) is not None:
        overrides["sigma_dist_levels"] = args.sigma_dist
    cfg = dataclasses.replace(cfg, **overrides)
    validate(cfg)
    return cfg


def _describe(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "validate-config":
            print(_describe(parse_config(args.config)))
            return 0
        cfg = _resolve(args, "grid" if args.command == "grid-train" else "car")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_grid_experiment(cfg) if cfg.experiment == "grid" else run_car_experiment(cfg)
    except Exception as exc:  # surfaced as a runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(summary)} runs to {cfg.output}")
    return 0
