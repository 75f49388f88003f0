from __future__ import annotations

import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfnav.harness import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    parse_text,
    phase_bounds,
    phase_stats,
    run_car_experiment,
    run_grid_experiment,
    sliding_window_avg,
)
from pfnav.harness.cli import main
from pfnav.harness.experiments import CAR_GENERATION_HEADER, GRID_EPISODE_HEADER


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSlidingWindow:
    def test_constant(self):
        np.testing.assert_array_equal(sliding_window_avg([2.5] * 120), [2.5] * 120)

    def test_expanding_start(self):
        np.testing.assert_allclose(sliding_window_avg([1, 3], 2), [1, 2])

    def test_window_one_is_identity(self):
        xs = [4.0, -1.0, 7.5]
        np.testing.assert_allclose(sliding_window_avg(xs, 1), xs)

    def test_errors(self):
        with pytest.raises(ValueError):
            sliding_window_avg([], 5)
        with pytest.raises(ValueError):
            sliding_window_avg([1.0], 0)
        with pytest.raises(ValueError):
            sliding_window_avg([1.0, math.inf])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=80), st.integers(1, 30))
    def test_matches_naive(self, xs, w):
        naive = [np.mean(xs[max(0, k - w + 1) : k + 1]) for k in range(len(xs))]
        np.testing.assert_allclose(sliding_window_avg(xs, w), naive, rtol=1e-9, atol=1e-6)


class TestPhaseStats:
    def test_constant_cv_zero(self):
        assert phase_stats([3.0] * 10, 0, 10).cv == 0.0

    def test_hand_example(self):
        s = phase_stats([1.0, 3.0], 0, 2, "early")
        assert (s.label, s.mean, s.variance, s.cv) == ("early", 2.0, 1.0, 0.5)

    def test_zero_mean_sentinel(self):
        assert math.isnan(phase_stats([-1.0, 1.0], 0, 2).cv)

    def test_range_checked(self):
        with pytest.raises(ValueError):
            phase_stats([1.0, 2.0], 1, 3)
        with pytest.raises(ValueError):
            phase_stats([1.0, 2.0], 1, 1)

    def test_thirds(self):
        assert phase_bounds(30_000) == ((0, 10_000), (20_000, 30_000))
        assert phase_bounds(2) == ((0, 1), (1, 2))


class TestConfig:
    def test_empty_is_defaults(self):
        cfg = parse_text("")
        assert cfg == ExperimentConfig()
        assert cfg.learn.alpha == 0.001 and cfg.learn.gamma == 0.999
        assert cfg.learn.particles == 500 and cfg.learn.episodes == 30_000
        assert cfg.evo.population == 30 and cfg.evo.compat_threshold == 2.0
        assert cfg.car.particles == 30

    def test_single_override(self):
        cfg = parse_text("grid.episodes=10\n")
        assert cfg.learn.episodes == 10
        assert cfg.learn == ExperimentConfig().learn.__class__(episodes=10)
        assert cfg.grid == ExperimentConfig().grid

    def test_bad_value_names_key(self):
        with pytest.raises(ConfigError, match="grid.alpha"):
            parse_text("grid.alpha=banana")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="grid.nope"):
            parse_text("grid.nope = 1")

    def test_int_key_rejects_float(self):
        with pytest.raises(ConfigError, match="neat.population"):
            parse_text("neat.population=2.5")

    def test_out_of_range_value_names_key(self):
        with pytest.raises(ConfigError, match="grid.alpha"):
            parse_text("grid.alpha=3")

    def test_comments_lists_and_nested(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# car run\nexperiment = car\nseeds = 0, 1,2\ncar.sigma_dist = 0,50\n"
            "car.sigma_theta = 10  # degrees\nneat.conn_add=0.3\nneat.fitness.gates=8\nfilter=on\n"
        )
        cfg = parse_config(path)
        assert cfg.experiment == "car" and cfg.seeds == (0, 1, 2)
        assert cfg.sigma_dist_levels == (0.0, 50.0)
        assert cfg.car.sigma_theta == 10.0
        assert cfg.evo.rates.conn_add == 0.3
        assert cfg.fitness.gates == 8
        assert cfg.arms == (True,)

    @pytest.mark.parametrize(
        "text, key",
        [("seeds=", "seeds"), ("filter=maybe", "filter"), ("car.track=/no/such/file", "car.track"),
         ("experiment=boat", "experiment"), ("no equals sign", "expected key=value"),
         ("grid.episodes=1\ngrid.episodes=2", "duplicate")],
    )
    def test_invalid(self, text, key):
        with pytest.raises(ConfigError, match=key):
            parse_text(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "absent.cfg")


def small_grid(tmp_path, name="out", **kw) -> ExperimentConfig:
    cfg = parse_text("grid.episodes=10\ngrid.particles=40\n")
    return replace(cfg, output=str(tmp_path / name), **kw)


class TestGridExperiment:
    def test_rows_and_schema(self, tmp_path):
        cfg = small_grid(tmp_path, seeds=(2,))
        summary = run_grid_experiment(cfg)
        assert len(summary) == 2
        for arm in ("filtered", "unfiltered"):
            rows = read_rows(tmp_path / "out" / f"grid_seed2_{arm}.csv")
            assert tuple(rows[0]) == GRID_EPISODE_HEADER
            assert len(rows) == 11
            assert all(len(r) == len(rows[0]) for r in rows)
            assert len(read_rows(tmp_path / "out" / f"grid_seed2_{arm}_window50.csv")) == 11
        summary_rows = read_rows(tmp_path / "out" / "grid_summary.csv")
        assert len(summary_rows) == 3

    def test_repeat_is_byte_identical(self, tmp_path):
        run_grid_experiment(small_grid(tmp_path, "a"))
        run_grid_experiment(small_grid(tmp_path, "b"))
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_arm_isolation(self, tmp_path):
        run_grid_experiment(small_grid(tmp_path, "both"))
        run_grid_experiment(small_grid(tmp_path, "off", filter="off"))
        name = "grid_seed0_unfiltered.csv"
        assert (tmp_path / "both" / name).read_bytes() == (tmp_path / "off" / name).read_bytes()
        assert not (tmp_path / "off" / "grid_seed0_filtered.csv").exists()

    def test_workers_match_serial(self, tmp_path):
        run_grid_experiment(small_grid(tmp_path, "serial", seeds=(0, 1)))
        run_grid_experiment(small_grid(tmp_path, "pool", seeds=(0, 1), workers=2))
        for f in sorted((tmp_path / "serial").iterdir()):
            assert f.read_bytes() == (tmp_path / "pool" / f.name).read_bytes()

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            run_grid_experiment(replace(small_grid(tmp_path), output=str(blocker / "sub")))


class TestCarExperiment:
    def test_rows_per_run(self, tmp_path):
        cfg = parse_text(
            f"experiment=car\nneat.generations=2\ncar.max_steps=40\ncar.sigma_dist=0,50\noutput={tmp_path / 'car'}\n"
        )
        summary = run_car_experiment(cfg)
        assert len(summary) == 4
        for arm in ("filtered", "unfiltered"):
            for sd in ("0", "50"):
                rows = read_rows(tmp_path / "car" / f"car_seed0_{arm}_sd{sd}.csv")
                assert tuple(rows[0]) == CAR_GENERATION_HEADER
                assert len(rows) == 3
        assert len(read_rows(tmp_path / "car" / "car_summary.csv")) == 5


class TestCli:
    def test_grid_train(self, tmp_path, capsys):
        cfg = tmp_path / "g.cfg"
        cfg.write_text("grid.episodes=5\ngrid.particles=20\n")
        code = main(["grid-train", "--config", str(cfg), "--filter", "on", "--seed", "1,2", "--out", str(tmp_path / "o")])
        assert code == 0
        names = sorted(p.name for p in (tmp_path / "o").iterdir())
        assert "grid_seed1_filtered.csv" in names and "grid_seed2_filtered.csv" in names
        assert not any("unfiltered" in n for n in names)

    def test_car_evolve(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("neat.generations=1\ncar.max_steps=20\n")
        code = main(["car-evolve", "--config", str(cfg), "--sigma-dist", "5", "--seed", "0", "--out", str(tmp_path / "o")])
        assert code == 0
        assert (tmp_path / "o" / "car_seed0_filtered_sd5.csv").exists()

    def test_validate_config(self, tmp_path, capsys):
        good = tmp_path / "good.cfg"
        good.write_text("grid.gamma=0.9\n")
        assert main(["validate-config", "--config", str(good)]) == 0
        assert "gamma=0.9" in capsys.readouterr().out

    def test_config_error_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("grid.alpha=banana\n")
        assert main(["validate-config", "--config", str(bad)]) == 2
        assert "grid.alpha" in capsys.readouterr().err
        assert main(["grid-train", "--config", str(bad)]) == 2

    def test_bad_arguments_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["grid-train", "--filter", "sometimes"])
        assert exc.value.code == 2

    def test_runtime_error_exit_one(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        cfg = tmp_path / "g.cfg"
        cfg.write_text("grid.episodes=1\n")
        assert main(["grid-train", "--config", str(cfg), "--out", str(blocker / "sub")]) == 1
        assert "error" in capsys.readouterr().err
