import os

import numpy as np
import pytest

from tddr_lab import cli
from tddr_lab.runner import (
    ConfigError,
    ExperimentConfig,
    config_to_text,
    emit_csv,
    load_config,
    returns_path,
    run_experiment,
    run_sweep,
)

FAST = """
algorithm = tddr
env = linear_track
total_steps = 300
eval_period = 100
eval_episodes = 2
seeds = 0
start_steps = 10
batch_size = 16
hidden_dim = 16
embed_dim = 8
"""


class TestLoadConfig:
    def test_defaults(self):
        cfg = load_config("algorithm = tddr")
        assert cfg.env == "linear_track" and cfg.seeds == [0, 1, 2]

    def test_parses_types(self):
        cfg = load_config(FAST)
        assert cfg.total_steps == 300
        assert cfg.eval_episodes == 2
        assert cfg.seeds == [0]

    def test_comments_and_colons(self):
        cfg = load_config("upsilon: 0.25  # the mixing weight\n\n")
        assert cfg.upsilon == 0.25

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            load_config("upsilon = 0.5\nlearning_rate = 3e-4")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="bad value"):
            load_config("total_steps = soon")

    def test_bad_algorithm_and_env(self):
        with pytest.raises(ConfigError):
            load_config("algorithm = ppo")
        with pytest.raises(ConfigError):
            load_config("env = atari")

    def test_steps_vs_eval_period(self):
        with pytest.raises(ConfigError):
            load_config("total_steps = 10\neval_period = 100")

    def test_empty_seeds(self):
        with pytest.raises(ConfigError):
            load_config("seeds = ")

    def test_file_path(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text(FAST)
        assert load_config(str(p)).total_steps == 300

    def test_round_trip(self):
        cfg = load_config(FAST)
        again = load_config(config_to_text(cfg))
        assert cfg.snapshot() == again.snapshot()


class TestRunExperiment:
    def test_rows_on_schedule(self, tmp_path):
        cfg = load_config(FAST)
        logs = run_experiment(cfg, out_dir=str(tmp_path))
        assert len(logs) == 1
        assert [r[0] for r in logs[0].rows] == [100, 200, 300]
        assert all(len(r[2]) == 2 for r in logs[0].rows)

    def test_csv_files_written_and_reload(self, tmp_path):
        cfg = load_config(FAST)
        logs = run_experiment(cfg, out_dir=str(tmp_path))
        emit_csv(logs, str(tmp_path))
        data = np.genfromtxt(returns_path(str(tmp_path), 0), delimiter=",",
                             names=True)
        assert data.shape == (3,)
        np.testing.assert_allclose(
            data["mean_return"], [r[1] for r in logs[0].rows], rtol=1e-16)
        agg = np.genfromtxt(os.path.join(str(tmp_path), "aggregate.csv"),
                            delimiter=",", names=True)
        assert agg.dtype.names == ("step", "mean_return", "std_return")
        assert os.path.exists(os.path.join(str(tmp_path), "aggregate.dat"))

    def test_byte_identical_reruns(self, tmp_path):
        cfg = load_config(FAST)
        run_experiment(cfg, out_dir=str(tmp_path / "a"))
        run_experiment(cfg, out_dir=str(tmp_path / "b"))
        fa = open(returns_path(str(tmp_path / "a"), 0), "rb").read()
        fb = open(returns_path(str(tmp_path / "b"), 0), "rb").read()
        assert fa == fb

    def test_crash_leaves_complete_rows(self, tmp_path):
        cfg = load_config(FAST)

        def boom(seed, step):
            if step >= 200:
                raise RuntimeError("injected crash")

        with pytest.raises(RuntimeError):
            run_experiment(cfg, out_dir=str(tmp_path), on_row=boom)
        lines = open(returns_path(str(tmp_path), 0)).read().splitlines()
        assert lines[0].startswith("step,mean_return,ep0")
        assert len(lines) == 3  # header + the two rows flushed before the crash
        for ln in lines[1:]:
            assert len(ln.split(",")) == 4  # step, mean, ep0, ep1

    def test_bias_rows_when_enabled(self, tmp_path):
        cfg = load_config(FAST + "measure_bias = true\nbias_probe_states = 3")
        logs = run_experiment(cfg, out_dir=str(tmp_path))
        emit_csv(logs, str(tmp_path))
        assert len(logs[0].bias_rows) == 3
        bias = np.genfromtxt(os.path.join(str(tmp_path), "bias.csv"),
                             delimiter=",", names=True)
        assert bias.dtype.names == ("step", "upsilon", "mean_bias", "std_bias")


class TestRunSweep:
    def test_sweep_outputs(self, tmp_path):
        cfg = load_config(FAST)
        res = run_sweep(cfg, [0.0, 1.0], out_dir=str(tmp_path))
        assert {c.upsilon for c in res.cells} == {0.0, 1.0}
        assert os.path.exists(os.path.join(str(tmp_path), "sweep_u0.csv"))
        assert os.path.exists(os.path.join(str(tmp_path), "sweep_summary.csv"))
        best = float(open(os.path.join(str(tmp_path),
                                       "best_upsilon.txt")).read())
        assert best in (0.0, 1.0)

    def test_grid_validation(self):
        with pytest.raises(ConfigError):
            run_sweep(load_config(FAST), [0.5, 1.5])


class TestCli:
    def test_train_exit_ok(self, tmp_path, capsys):
        p = tmp_path / "cfg.txt"
        p.write_text(FAST + f"out_dir = {tmp_path / 'out'}\n")
        assert cli.main(["train", "--config", str(p)]) == cli.EXIT_OK
        assert "seed 0" in capsys.readouterr().out
        assert os.path.exists(returns_path(str(tmp_path / "out"), 0))

    def test_config_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("algorithm = ppo\n")
        assert cli.main(["train", "--config", str(p)]) == cli.EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_gradcheck_fast(self, capsys):
        assert cli.main(["gradcheck", "--nets", "5"]) == cli.EXIT_OK
        assert "max relative gradient error" in capsys.readouterr().out

    def test_tabular_check_tiny(self, capsys):
        assert cli.main(["tabular-check", "--seeds", "1",
                         "--steps", "200000"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "FAIL" not in out

    def test_sweep_cli(self, tmp_path, capsys):
        p = tmp_path / "cfg.txt"
        p.write_text(FAST + f"out_dir = {tmp_path / 'out'}\n")
        assert cli.main(["sweep", "--config", str(p),
                         "--upsilon", "0,1"]) == cli.EXIT_OK
        assert "best upsilon" in capsys.readouterr().out
