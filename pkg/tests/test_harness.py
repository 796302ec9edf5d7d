"""Tests for data preparation, the training loops and rollout evaluation."""

import json

import numpy as np
import pytest
import torch

from fwdlearn.agents.oracle import TrueDeltaAgent
from fwdlearn.agents.persist import agent_from_checkpoint
from fwdlearn.agents.persist import load_agent
from fwdlearn.agents.persist import save_agent
from fwdlearn.agents.sac import SacAgent
from fwdlearn.agents.sac import SacConfig
from fwdlearn.agents.supervised import SupervisedAgent
from fwdlearn.agents.supervised import build_examples
from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import DataError
from fwdlearn.core.exceptions import TrainingFault
from fwdlearn.env.forward import ForwardModelEnv
from fwdlearn.env.forward import FwdEnvConfig
from fwdlearn.harness.evaluation import RolloutRow
from fwdlearn.harness.evaluation import bind_agent
from fwdlearn.harness.evaluation import eval_pool
from fwdlearn.harness.evaluation import eval_rollouts
from fwdlearn.harness.evaluation import evaluate_policy
from fwdlearn.harness.evaluation import read_rollout_csv
from fwdlearn.harness.evaluation import read_trace_csv
from fwdlearn.harness.evaluation import rollout_episode
from fwdlearn.harness.evaluation import supervised_mse
from fwdlearn.harness.evaluation import write_rollout_csv
from fwdlearn.harness.evaluation import write_trace_csv
from fwdlearn.harness.records import read_metrics_csv
from fwdlearn.harness.training import checkpoint_path
from fwdlearn.harness.training import collect
from fwdlearn.harness.training import deterministic_torch
from fwdlearn.harness.training import prepare_data
from fwdlearn.harness.training import should_evaluate
from fwdlearn.harness.training import train_rl
from fwdlearn.harness.training import train_sl
from fwdlearn.nn.checkpoint import Checkpoint
from fwdlearn.nn.checkpoint import load_checkpoint
from fwdlearn.systems.dataset import generate_dataset
from fwdlearn.systems.io import save_dataset


@pytest.fixture
def tiny_config(tiny_manager):
    return tiny_manager.build()


class TestPrepareData:
    def test_generated_split(self, tiny_config):
        data = prepare_data(tiny_config)
        assert len(data.dataset) == 6
        assert (len(data.train), len(data.holdout)) == (4, 2)
        assert data.bounds.shape == (1,)
        assert data.scaler.min.shape == (3,)

    def test_same_seed_same_data(self, tiny_config):
        assert prepare_data(tiny_config).dataset == prepare_data(tiny_config).dataset

    def test_dataset_file(self, tmp_path, tiny_manager, msd_data):
        path = save_dataset(tmp_path / "msd.fwdb", msd_data)
        tiny_manager.update_config({"system": "msd", "dataset": str(path)})
        data = prepare_data(tiny_manager.build())
        assert data.dataset == msd_data

    def test_dataset_file_for_another_system(self, tmp_path, tiny_manager, msd_data):
        path = save_dataset(tmp_path / "msd.fwdt", msd_data)
        tiny_manager.update_config({"dataset": str(path)})
        with pytest.raises(ConfigError, match="msd"):
            prepare_data(tiny_manager.build())

    def test_missing_dataset_file(self, tmp_path, tiny_manager):
        tiny_manager.update_config({"dataset": str(tmp_path / "absent.fwdt")})
        with pytest.raises(ConfigError, match="not found"):
            prepare_data(tiny_manager.build())


class TestCollect:
    def test_oracle_episode(self, pendulum_data, small_env_config, pendulum_bounds):
        env = ForwardModelEnv(pendulum_data, small_env_config, pendulum_bounds)
        result = collect(env, TrueDeltaAgent(env), explore=False, max_steps=10_000, seed=4)
        start = env.rollout.start_index
        assert result.terminated
        assert result.steps == 120 - start
        assert result.rollout_ends == (120 - start) // 10
        assert abs(result.total_reward) < 1e-6

    def test_capped_and_chained(self, pendulum_data, small_env_config, pendulum_scaler, pendulum_bounds):
        env = ForwardModelEnv(pendulum_data, small_env_config, pendulum_bounds)
        agent = SacAgent(pendulum_data.system, 4, pendulum_scaler, pendulum_bounds, SacConfig(), (8,))
        result = collect(env, agent, explore=True, max_steps=25, seed=1)
        assert result.steps == 25
        assert not result.terminated
        for (_, _, _, next_obs, _), (obs, _, _, _, _) in zip(result.transitions, result.transitions[1:]):
            assert np.array_equal(next_obs, obs)

    def test_seeded_reset(self, pendulum_data, small_env_config, pendulum_bounds):
        env = ForwardModelEnv(pendulum_data, small_env_config, pendulum_bounds)
        first = collect(env, TrueDeltaAgent(env), explore=False, max_steps=3, seed=9)
        second = collect(env, TrueDeltaAgent(env), explore=False, max_steps=3, seed=9)
        assert np.array_equal(first.transitions[0][0], second.transitions[0][0])


class TestSchedules:
    @pytest.mark.parametrize(
        "round_index, total, every, expected",
        [(1, 10, 5, True), (3, 10, 5, False), (5, 10, 5, True), (10, 10, 7, True), (7, 10, 7, True), (8, 10, 7, False)],
    )
    def test_should_evaluate(self, round_index, total, every, expected):
        assert should_evaluate(round_index, total, every) is expected

    def test_checkpoint_path(self, tmp_path):
        assert checkpoint_path(tmp_path, 100) == tmp_path / "checkpoints" / "episode_000100.fwdc"

    def test_deterministic_torch_restores_settings(self):
        threads = torch.get_num_threads()
        enabled = torch.are_deterministic_algorithms_enabled()
        with deterministic_torch(True):
            assert torch.get_num_threads() == 1
            assert torch.are_deterministic_algorithms_enabled()
        assert torch.get_num_threads() == threads
        assert torch.are_deterministic_algorithms_enabled() == enabled

    def test_deterministic_torch_restores_after_an_error(self):
        enabled = torch.are_deterministic_algorithms_enabled()
        with pytest.raises(RuntimeError), deterministic_torch(True):
            raise RuntimeError("boom")
        assert torch.are_deterministic_algorithms_enabled() == enabled

    def test_training_leaves_torch_settings_alone(self, tiny_config):
        threads = torch.get_num_threads()
        enabled = torch.are_deterministic_algorithms_enabled()
        train_sl(tiny_config)
        assert torch.get_num_threads() == threads
        assert torch.are_deterministic_algorithms_enabled() == enabled


class TestTrainRl:
    def test_output_layout(self, tiny_manager, tiny_config):
        result = train_rl(tiny_config, tiny_manager)
        out = tiny_config.out_dir
        assert (out / "run.json").is_file()
        assert (out / "model.fwdc").is_file()
        assert (out / "checkpoints" / "episode_000002.fwdc").is_file()
        assert not (out / "checkpoints" / "episode_000001.fwdc").exists()
        assert result.model_path == out / "model.fwdc"

        manifest = json.loads((out / "run.json").read_text())
        assert manifest["run"] == "rl"
        assert manifest["sl_target_space"] == "delta_over_bound"
        assert manifest["episodes"] == 3

    def test_metrics_rows(self, tiny_manager, tiny_config):
        result = train_rl(tiny_config, tiny_manager)
        records = read_metrics_csv(result.metrics_path)
        assert records == result.records
        assert [r.round for r in records] == [1, 2, 3]
        for record in records:
            assert record.critic_loss is not None
            assert record.alpha is not None
            assert record.rmse_rollout is not None
            assert record.supervised_mse is not None
            assert record.total_env_reward is not None
            assert record.wall_ms is None

    def test_summary_accounting(self, tiny_manager, tiny_config):
        result = train_rl(tiny_config, tiny_manager)
        summary = json.loads((tiny_config.out_dir / "summary.json").read_text())
        assert summary == result.summary
        assert summary["status"] == "completed"
        assert summary["rounds"] == 3
        assert summary["total_updates"] == 6
        assert summary["skipped_updates"] == 0
        assert summary["checkpoints"] == ["checkpoints/episode_000002.fwdc"]
        assert load_agent(result.model_path).updates == 6

    def test_updates_skipped_while_buffer_fills(self, tiny_manager):
        tiny_manager.update_config({"sac": {"batch_size": 1000}})
        result = train_rl(tiny_manager.build(), tiny_manager)
        assert result.summary["total_updates"] == 0
        assert result.summary["skipped_updates"] == 6
        assert all(r.critic_loss is None for r in result.records)

    def test_runs_are_reproducible(self, tmp_path, tiny_manager):
        tiny_manager.update_config({"out_dir": str(tmp_path / "a")})
        first = train_rl(tiny_manager.build(), tiny_manager)
        tiny_manager.update_config({"out_dir": str(tmp_path / "b")})
        second = train_rl(tiny_manager.build(), tiny_manager)
        assert first.metrics_path.read_bytes() == second.metrics_path.read_bytes()
        a, b = load_checkpoint(first.model_path), load_checkpoint(second.model_path)
        assert a.sections.keys() == b.sections.keys()
        assert all(np.array_equal(a.sections[k], b.sections[k]) for k in a.sections)

    def test_training_fault_keeps_checkpoints(self, tiny_manager, monkeypatch):
        tiny_manager.update_config({"checkpoint_every": 1})
        config = tiny_manager.build()
        original = SacAgent.update
        calls = []

        def flaky(self, buffer, rng=None):
            calls.append(1)
            if len(calls) > 2:
                raise TrainingFault("non-finite critic_loss=nan")
            return original(self, buffer, rng)

        monkeypatch.setattr(SacAgent, "update", flaky)
        with pytest.raises(TrainingFault):
            train_rl(config, tiny_manager)

        summary = json.loads((config.out_dir / "summary.json").read_text())
        assert summary["status"] == "aborted"
        assert summary["rounds"] == 1
        assert summary["checkpoints"] == ["checkpoints/episode_000001.fwdc"]
        assert not (config.out_dir / "model.fwdc").exists()
        assert load_agent(config.out_dir / "checkpoints" / "episode_000001.fwdc").updates == 2


class TestTrainSl:
    def test_rounds_and_columns(self, tiny_manager, tiny_config):
        result = train_sl(tiny_config, tiny_manager)
        assert result.summary["total_updates"] == 9
        assert result.summary["run"] == "sl"
        for record in result.records:
            assert record.critic_loss is None
            assert record.total_env_reward is None
            assert record.supervised_mse is not None
            assert record.rmse_rollout is not None
        assert isinstance(load_agent(result.model_path), SupervisedAgent)

    def test_starts_from_the_same_weights_as_rl(self, tiny_config):
        data = prepare_data(tiny_config)
        rl = SacAgent(data.dataset.system, 3, data.scaler, data.bounds, tiny_config.sac, tiny_config.hidden, seed=tiny_config.seed)
        sl = SupervisedAgent(data.dataset.system, 3, data.scaler, data.bounds, tiny_config.sl, tiny_config.hidden, seed=tiny_config.seed)
        assert all(torch.equal(a, b) for a, b in zip(rl.actor.parameters(), sl.policy.parameters(), strict=True))


class TestRolloutEvaluation:
    def test_bind_agent(self, pendulum_data, small_env_config, pendulum_bounds):
        env = ForwardModelEnv(pendulum_data, small_env_config, pendulum_bounds)
        assert isinstance(bind_agent(TrueDeltaAgent, env), TrueDeltaAgent)
        agent = TrueDeltaAgent(env)
        assert bind_agent(agent, env) is agent

    def test_eval_pool_is_fixed_and_filtered(self, msd):
        dataset = generate_dataset(msd, ["random"], 8, 60, seed=1, min_len=10)
        pool = eval_pool(dataset, 3, seed=5, min_length=30)
        assert pool == eval_pool(dataset, 3, seed=5, min_length=30)
        assert len(pool) <= 3
        assert all(dataset.episodes[i].length > 30 for i in pool)

    def test_rollout_episode_regrounds_every_h(self, pendulum_data, small_env_config, pendulum_bounds):
        trace = rollout_episode(TrueDeltaAgent, pendulum_data, small_env_config, pendulum_bounds, 0, 25)
        assert trace.true.shape == (120, 2)
        assert trace.boundaries == [25, 50, 75, 100]
        assert trace.rmse < 1e-9
        assert trace.mean_rollout_reward == pytest.approx(0.0, abs=1e-6)

    def test_oracle_sweep(self, pendulum_data, small_env_config, pendulum_bounds):
        rows, traces = eval_rollouts(
            TrueDeltaAgent, pendulum_data, small_env_config, pendulum_bounds, [10, 50, 500], 2, seed=0, keep_traces=True
        )
        assert [row.h for row in rows] == [10, 50, 500]
        for row in rows[:2]:
            assert row.n_episodes == 2
            assert row.mean_rmse < 1e-9
        assert rows[2].absent
        assert rows[2].mean_rmse is None
        assert sorted(traces) == [10, 50]

    def test_zero_model_has_larger_error_at_longer_horizons(self, msd_data, small_env_config):
        class Zero:
            def act(self, obs, explore=False):
                return np.zeros(1)

        rows, _ = eval_rollouts(Zero(), msd_data, small_env_config, np.ones(1), [1, 100], 4, seed=0)
        assert rows[0].mean_rmse < rows[1].mean_rmse

    def test_evaluation_does_not_touch_the_agent(self, tiny_config):
        data = prepare_data(tiny_config)
        agent = SacAgent(data.dataset.system, 3, data.scaler, data.bounds, tiny_config.sac, tiny_config.hidden)
        before = [p.detach().clone() for p in agent.actor.parameters()]
        evaluate_policy(agent, data.holdout, tiny_config.env, data.bounds, 2, seed=0)
        supervised_mse(agent.actor, build_examples(data.holdout, 3))
        assert all(torch.equal(a, b) for a, b in zip(before, agent.actor.parameters(), strict=True))

    def test_evaluate_policy_absent_when_episodes_are_short(self, msd_data):
        config = FwdEnvConfig(window_w=2, rollout_h=500, start_offset_max=0)
        assert evaluate_policy(TrueDeltaAgent, msd_data, config, np.ones(1), 2, seed=0) == (None, None)


class TestRolloutTables:
    def test_rollout_csv_round_trip(self, tmp_path):
        rows = [RolloutRow(10, 0.125, 0.0625, -0.5, 2), RolloutRow(500, None, None, None, 0)]
        path = write_rollout_csv(rows, tmp_path / "rollouts.csv")
        assert path.read_text().splitlines()[2] == "500,,,,0"
        assert read_rollout_csv(path) == rows

    def test_trace_csv_round_trip(self, tmp_path, pendulum_data, small_env_config, pendulum_bounds):
        trace = rollout_episode(TrueDeltaAgent, pendulum_data, small_env_config, pendulum_bounds, 2, 40)
        path = write_trace_csv(trace, tmp_path / "traces" / "trace.csv")
        loaded = read_trace_csv(path, h=40, episode_index=2)
        assert np.array_equal(loaded.true, trace.true)
        assert np.array_equal(loaded.predicted, trace.predicted)
        assert loaded.boundaries == [40, 80, 120]


class TestPersist:
    def test_save_and_load_both_kinds(self, tmp_path, pendulum_data, pendulum_scaler, pendulum_bounds):
        sac = SacAgent(pendulum_data.system, 3, pendulum_scaler, pendulum_bounds, SacConfig(), (8,))
        sl = SupervisedAgent(pendulum_data.system, 3, pendulum_scaler, pendulum_bounds, hidden=(8,))
        assert isinstance(load_agent(save_agent(tmp_path / "sac.fwdc", sac)), SacAgent)
        assert isinstance(load_agent(save_agent(tmp_path / "sl.fwdc", sl, {"seed": 1})), SupervisedAgent)

    def test_unknown_kind(self):
        with pytest.raises(DataError, match="unknown checkpoint kind"):
            agent_from_checkpoint(Checkpoint({"kind": "ppo"}))
