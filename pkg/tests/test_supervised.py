"""Tests for the supervised one-step baseline."""

import numpy as np
import pytest
import torch

from fwdlearn.agents.sac import SacAgent
from fwdlearn.agents.sac import SacConfig
from fwdlearn.agents.supervised import SL_TARGET_SPACE
from fwdlearn.agents.supervised import SlConfig
from fwdlearn.agents.supervised import SlExamples
from fwdlearn.agents.supervised import SupervisedAgent
from fwdlearn.agents.supervised import build_examples
from fwdlearn.agents.supervised import make_sl_example
from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import DataError
from fwdlearn.core.exceptions import EmptyDatasetError
from fwdlearn.env.forward import delta_bounds
from fwdlearn.nn.checkpoint import dumps_checkpoint
from fwdlearn.nn.checkpoint import loads_checkpoint
from fwdlearn.systems.base import Dataset
from fwdlearn.systems.dataset import minmax_stats

WINDOW = 4


@pytest.fixture(scope="module")
def msd_examples(msd_data):
    return build_examples(msd_data, WINDOW)


def _agent(data, **overrides):
    config = SlConfig(**{"batch_size": 64, "minibatches_per_round": 10, "lr": 1e-2, "window_w": WINDOW, **overrides})
    return SupervisedAgent(data.system, WINDOW, minmax_stats(data), delta_bounds(data), config, hidden=(16,), seed=2)


class TestSlConfig:
    @pytest.mark.parametrize("kwargs", [{"batch_size": 0}, {"minibatches_per_round": 0}, {"lr": -1.0}, {"window_w": 0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SlConfig(**kwargs)

    def test_zero_learning_rate_allowed(self):
        assert SlConfig(lr=0.0).lr == 0.0


class TestExamples:
    def test_one_example_per_transition(self, msd_data, msd_examples):
        assert len(msd_examples) == sum(msd_data.lengths)
        assert msd_examples.inputs.shape == (sum(msd_data.lengths), WINDOW * 3)
        assert msd_examples.targets.shape == (sum(msd_data.lengths), 1)

    @pytest.mark.parametrize("t", [0, 2, 57, 119])
    def test_matches_single_example(self, msd_data, msd_examples, t):
        episode = msd_data.episodes[1]
        window, delta = make_sl_example(episode, t, WINDOW, msd_data.system)
        row = msd_data.episodes[0].length + t
        assert np.array_equal(msd_examples.inputs[row], window)
        assert np.array_equal(msd_examples.targets[row], delta)

    def test_empty_dataset(self, msd):
        with pytest.raises(EmptyDatasetError):
            build_examples(Dataset(msd, ()), WINDOW)


class TestSupervisedAgent:
    def test_starts_from_the_sac_actor_weights(self, msd_data):
        sl = _agent(msd_data)
        sac = SacAgent(msd_data.system, WINDOW, minmax_stats(msd_data), delta_bounds(msd_data), SacConfig(), (16,), seed=2)
        assert all(torch.equal(a, b) for a, b in zip(sl.policy.parameters(), sac.actor.parameters(), strict=True))

    def test_window_comes_from_one_place(self, msd_data):
        agent = SupervisedAgent(msd_data.system, 5, minmax_stats(msd_data), delta_bounds(msd_data), hidden=(8,))
        assert agent.config.window_w == agent.policy.window_w == 5
        with pytest.raises(ConfigError, match="window"):
            _agent(msd_data, window_w=WINDOW + 1)

    def test_training_reduces_one_step_error(self, msd_data, msd_examples):
        agent = _agent(msd_data)
        before = agent.one_step_mse(msd_examples)
        for _ in range(20):
            agent.sl_round(msd_examples)
        assert agent.updates == 200
        assert agent.one_step_mse(msd_examples) < 0.5 * before

    def test_zero_learning_rate_keeps_weights(self, msd_data, msd_examples):
        agent = _agent(msd_data, lr=0.0)
        before = [p.detach().clone() for p in agent.params]
        loss = agent.sl_round(msd_examples)
        assert np.isfinite(loss)
        assert all(torch.equal(a, b) for a, b in zip(before, agent.params, strict=True))

    def test_round_on_no_examples(self, msd_data):
        agent = _agent(msd_data)
        with pytest.raises(EmptyDatasetError):
            agent.sl_round(SlExamples(np.zeros((0, WINDOW * 3)), np.zeros((0, 1))))

    def test_small_example_set_is_sampled_with_replacement(self, msd_data, msd_examples):
        agent = _agent(msd_data, batch_size=64)
        few = SlExamples(msd_examples.inputs[:10], msd_examples.targets[:10])
        assert np.isfinite(agent.sl_round(few))

    def test_act_is_greedy(self, msd_data, msd_examples):
        agent = _agent(msd_data)
        obs = msd_examples.inputs[5]
        assert np.array_equal(agent.act(obs, explore=True), agent.act(obs))

    def test_checkpoint_round_trip_is_byte_identical(self, msd_data, msd_examples):
        agent = _agent(msd_data)
        agent.sl_round(msd_examples)
        blob = dumps_checkpoint(agent.checkpoint({"run": "sl"}))
        loaded = SupervisedAgent.from_checkpoint(loads_checkpoint(blob))
        assert loaded.checkpoint().header["sl_target_space"] == SL_TARGET_SPACE
        assert dumps_checkpoint(loaded.checkpoint()) == blob
        assert loaded.one_step_mse(msd_examples) == agent.one_step_mse(msd_examples)

    def test_rejects_sac_checkpoint(self, msd_data):
        sac = SacAgent(msd_data.system, WINDOW, minmax_stats(msd_data), delta_bounds(msd_data), SacConfig(), (16,))
        with pytest.raises(DataError):
            SupervisedAgent.from_checkpoint(sac.checkpoint())
