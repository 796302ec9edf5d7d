"""Tests for the command line interface."""

import pytest

from fwdlearn.__main__ import build_parser
from fwdlearn.__main__ import main
from fwdlearn.agents.persist import load_agent
from fwdlearn.harness.evaluation import read_rollout_csv
from fwdlearn.systems.io import load_dataset
from fwdlearn.utils.version import vernum


@pytest.fixture
def tiny_config_file(tiny_manager, tmp_path):
    return tiny_manager.save_config(tmp_path / "tiny.json")


def run(*argv):
    return main(["--log-level", "WARNING", *map(str, argv)])


class TestParser:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert f"fwdlearn {vernum}" in capsys.readouterr().out

    def test_command_is_required(self):
        with pytest.raises(SystemExit) as excinfo:
            build_parser().parse_args([])
        assert excinfo.value.code == 2

    def test_lists_are_parsed(self):
        args = build_parser().parse_args(["compare", "--seeds", "3,4", "--out", "x"])
        assert args.seeds == [3, 4]
        args = build_parser().parse_args(["report", "--metrics", "rl=a.csv,b.csv", "--out", "x"])
        assert args.metrics == [("rl", ["a.csv", "b.csv"])]

    def test_bad_list(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["eval-rollout", "--lengths", "5,x", "--out", "x"])


class TestGen:
    def test_writes_dataset(self, tmp_path):
        out = tmp_path / "msd.fwdt"
        assert run("gen", "--system", "msd", "--episodes", 3, "--max-len", 40, "--seed", 2, "--out", out) == 0
        dataset = load_dataset(out)
        assert len(dataset) == 3
        assert dataset.system.name == "msd"
        assert dataset.lengths == [40, 40, 40]

    def test_filter(self, tmp_path):
        out = tmp_path / "pendulum.fwdb"
        args = ("gen", "--episodes", 8, "--max-len", 40, "--min-len", 5, "--filter-min-len", 10, "--out", out)
        assert run(*args) == 0
        assert all(length >= 10 for length in load_dataset(out).lengths)

    def test_nothing_survives_the_filter(self, tmp_path):
        args = ("gen", "--episodes", 2, "--max-len", 40, "--filter-min-len", 41, "--out", tmp_path / "x.fwdb")
        assert run(*args) == 3
        assert not (tmp_path / "x.fwdb").exists()

    def test_unknown_system_is_a_config_error(self, tmp_path, capsys):
        assert run("gen", "--system", "rocket", "--episodes", 1, "--max-len", 10, "--out", tmp_path / "x.fwdt") == 2
        assert "unknown system 'rocket'" in capsys.readouterr().err


class TestTrain:
    def test_train_sl(self, tiny_config_file, tmp_path, capsys):
        out = tmp_path / "sl"
        assert run("train-sl", "--config", tiny_config_file, "--out", out) == 0
        assert "updates=9" in capsys.readouterr().out
        assert load_agent(out / "model.fwdc").kind == "sl"

    def test_overrides_and_seed(self, tiny_config_file, tmp_path):
        out = tmp_path / "rl"
        args = ("train-rl", "--config", tiny_config_file, "--set", "episodes=1", "--seed", 5, "--out", out)
        assert run(*args) == 0
        assert (out / "metrics.csv").read_text().count("\n") == 2
        agent = load_agent(out / "model.fwdc")
        assert agent.config_echo["seed"] == 5

    def test_unknown_key(self, tiny_config_file):
        assert run("train-rl", "--config", tiny_config_file, "--set", "nope=1") == 2

    def test_malformed_set(self, tiny_config_file):
        assert run("train-rl", "--config", tiny_config_file, "--set", "episodes") == 2

    def test_missing_config_file(self, tmp_path):
        assert run("train-sl", "--config", tmp_path / "absent.json") == 2


class TestEvalRollout:
    def test_oracle_sweep(self, tiny_config_file, tmp_path, capsys):
        out = tmp_path / "eval"
        assert run("eval-rollout", "--config", tiny_config_file, "--oracle", "--lengths", "10,500", "--out", out) == 0
        rows = read_rollout_csv(out / "rollouts.csv")
        assert [row.h for row in rows] == [10, 500]
        assert rows[0].mean_rmse < 1e-9
        assert rows[1].absent
        assert "h=500 absent" in capsys.readouterr().out
        assert (out / "rollout_sweep.svg").is_file()
        assert list((out / "traces").glob("trace_h10_ep*.csv"))

    def test_checkpoint_is_required(self, tiny_config_file, tmp_path):
        assert run("eval-rollout", "--config", tiny_config_file, "--out", tmp_path / "eval") == 2

    def test_corrupt_checkpoint_is_a_data_error(self, tiny_config_file, tmp_path, capsys):
        bad = tmp_path / "bad.fwdc"
        bad.write_bytes(b"not a checkpoint")
        args = ("eval-rollout", "--config", tiny_config_file, "--checkpoint", bad, "--out", tmp_path / "eval")
        assert run(*args) == 3
        assert "bad magic" in capsys.readouterr().err

    def test_trained_checkpoint(self, tiny_config_file, tmp_path):
        assert run("train-sl", "--config", tiny_config_file, "--out", tmp_path / "sl") == 0
        args = ("eval-rollout", "--config", tiny_config_file, "--checkpoint", tmp_path / "sl" / "model.fwdc")
        assert run(*args, "--episodes", 1, "--out", tmp_path / "eval") == 0
        rows = read_rollout_csv(tmp_path / "eval" / "rollouts.csv")
        assert [row.n_episodes for row in rows] == [1, 1, 0]

    def test_checkpoint_for_another_system(self, tiny_config_file, tmp_path):
        assert run("train-sl", "--config", tiny_config_file, "--out", tmp_path / "sl") == 0
        args = ("eval-rollout", "--config", tiny_config_file, "--set", "system=msd")
        assert run(*args, "--checkpoint", tmp_path / "sl" / "model.fwdc", "--out", tmp_path / "eval") == 2


class TestReport:
    def test_report(self, tiny_config_file, tmp_path):
        assert run("train-sl", "--config", tiny_config_file, "--out", tmp_path / "sl") == 0
        args = ("report", "--metrics", f"sl={tmp_path / 'sl' / 'metrics.csv'}", "--out", tmp_path / "report")
        assert run(*args) == 0
        assert (tmp_path / "report" / "summary.txt").is_file()

    def test_missing_metrics_is_a_data_error(self, tmp_path):
        assert run("report", "--metrics", f"rl={tmp_path / 'absent.csv'}", "--out", tmp_path / "report") == 3

    def test_two_tables_for_one_label(self, tmp_path):
        assert run("report", "--rollouts", "rl=a.csv,b.csv", "--out", tmp_path / "report") == 2
