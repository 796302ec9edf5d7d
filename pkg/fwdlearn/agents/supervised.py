"""Fwdlearn Supervised Baseline

The plain supervised forward model: the same :class:`ForwardPolicy` as the
RL actor, trained by mean squared error on recorded one-step deltas. No
rollouts, rewards or replay buffer are involved.

Targets are regressed in bound units: the loss is
``mean((tanh(mean) - delta / bound) ** 2)``, the deterministic path of the
squashed head. ``supervised_mse`` values are reported in the same units.

License: MIT
"""

from __future__ import annotations

import logging
from dataclasses import asdict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import torch

from fwdlearn.agents.policy import ForwardPolicy
from fwdlearn.agents.policy import policy_sections
from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import DataError
from fwdlearn.core.exceptions import EmptyDatasetError
from fwdlearn.env.forward import position_deltas
from fwdlearn.env.forward import true_window
from fwdlearn.nn.checkpoint import Checkpoint
from fwdlearn.nn.checkpoint import load_module_sections
from fwdlearn.nn.checkpoint import load_optimizer_sections
from fwdlearn.nn.checkpoint import module_sections
from fwdlearn.nn.checkpoint import optimizer_sections
from fwdlearn.nn.mlp import DTYPE
from fwdlearn.nn.optim import adam_step
from fwdlearn.nn.optim import make_adam
from fwdlearn.nn.optim import value_and_grad
from fwdlearn.systems.base import Dataset
from fwdlearn.systems.base import Episode
from fwdlearn.systems.base import Scaler
from fwdlearn.systems.base import SystemSpec
from fwdlearn.utils.seeding import numpy_rng
from fwdlearn.utils.seeding import torch_generator

__all__ = ["SlConfig", "SlExamples", "SupervisedAgent", "make_sl_example", "build_examples", "SL_TARGET_SPACE"]

logger = logging.getLogger(__name__)

SL_TARGET_SPACE = "delta_over_bound"


@dataclass(frozen=True)
class SlConfig:
    batch_size: int = 1024
    minibatches_per_round: int = 100
    lr: float = 3e-4
    window_w: int = 20

    def __post_init__(self):
        for name in ("batch_size", "minibatches_per_round", "window_w"):
            if getattr(self, name) < 1:
                raise ConfigError(f"sl.{name} must be >= 1, got {getattr(self, name)}")
        if self.lr < 0:
            raise ConfigError(f"sl.lr must be >= 0, got {self.lr}")

    def to_dict(self) -> dict:
        return asdict(self)


class SlExamples(NamedTuple):
    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)


def make_sl_example(episode: Episode, t: int, window_w: int, system: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Stacked recorded frames ending at *t* and the recorded position delta at *t*."""
    return true_window(episode, t, window_w), position_deltas(episode, system)[t]


def build_examples(dataset: Dataset, window_w: int) -> SlExamples:
    """Every ``(window, delta)`` pair of *dataset*, episode by episode."""
    if len(dataset) == 0:
        raise EmptyDatasetError("no episodes to build supervised examples from")
    inputs, targets = [], []
    for episode in dataset.episodes:
        idx = np.maximum(np.arange(episode.length)[:, None] + np.arange(-window_w + 1, 1)[None, :], 0)
        frames = np.concatenate([episode.states[idx], episode.actions[idx]], axis=2)
        inputs.append(frames.reshape(episode.length, -1))
        targets.append(position_deltas(episode, dataset.system))
    return SlExamples(np.concatenate(inputs), np.concatenate(targets))


class SupervisedAgent:
    """Forward policy trained by one-step regression.

    Constructed with the same seed as a :class:`~fwdlearn.agents.sac.SacAgent`,
    it starts from the same actor weights.
    """

    kind = "sl"

    def __init__(
        self,
        system: SystemSpec,
        window_w: int,
        scaler: Scaler,
        bounds: np.ndarray,
        config: SlConfig | None = None,
        hidden: tuple[int, ...] = (64, 64),
        seed: int = 0,
    ):
        self.config = config or SlConfig(window_w=window_w)
        if self.config.window_w != window_w:
            raise ConfigError(f"sl.window_w ({self.config.window_w}) disagrees with the agent window ({window_w})")
        self.hidden = tuple(hidden)
        self.seed = int(seed)
        self.policy = ForwardPolicy(system, window_w, scaler, bounds, self.hidden, generator=torch_generator(seed, "init"))
        self.params = list(self.policy.parameters())
        self.optimizer = make_adam(self.params, self.config.lr)
        self.rng = numpy_rng(seed, "batches")
        self.updates = 0
        self.config_echo: dict = {}

    @property
    def system(self) -> SystemSpec:
        return self.policy.system

    def act(self, obs: np.ndarray, explore: bool = False) -> np.ndarray:
        return self.policy.act(obs, explore=False)

    def _loss(self, inputs: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
        return self.policy.mse(inputs, targets)

    def sl_round(self, examples: SlExamples, rng: np.random.Generator | None = None) -> float:
        """Run ``minibatches_per_round`` gradient steps; returns the mean batch MSE.

        Raises:
            TrainingFault: If a loss is non-finite.
        """
        rng = rng or self.rng
        n = len(examples)
        if n == 0:
            raise EmptyDatasetError("no supervised examples")
        size = self.config.batch_size
        losses = []
        for _ in range(self.config.minibatches_per_round):
            idx = rng.choice(n, size=size, replace=n < size)
            x = torch.as_tensor(examples.inputs[idx], dtype=DTYPE)
            y = torch.as_tensor(examples.targets[idx], dtype=DTYPE)
            value, grads = value_and_grad(self.params, lambda _: self._loss(x, y), what="supervised_mse")
            adam_step(self.optimizer, self.params, grads)
            losses.append(value)
            self.updates += 1
        return float(np.mean(losses))

    @torch.no_grad()
    def one_step_mse(self, examples: SlExamples) -> float:
        """Full-pass MSE on *examples* in bound units, without training."""
        x = torch.as_tensor(examples.inputs, dtype=DTYPE)
        y = torch.as_tensor(examples.targets, dtype=DTYPE)
        return float(self._loss(x, y))

    # ─────────────────────────────────────────────────
    # Persistence
    # ─────────────────────────────────────────────────

    def checkpoint(self, config_echo: dict | None = None) -> Checkpoint:
        sections = module_sections("actor", self.policy)
        sections.update(optimizer_sections("optim.actor", self.optimizer, self.params))
        sections.update(policy_sections(self.policy))
        header = {
            "kind": self.kind,
            "system": self.system.to_dict(),
            "window_w": self.policy.window_w,
            "hidden": list(self.hidden),
            "seed": self.seed,
            "updates": self.updates,
            "sl": self.config.to_dict(),
            "sl_target_space": SL_TARGET_SPACE,
            "architecture": self.policy.descriptor(),
            "architecture_hash": self.policy.descriptor_hash(),
            "config": config_echo if config_echo is not None else self.config_echo,
        }
        return Checkpoint(header, sections)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> SupervisedAgent:
        if checkpoint.kind != cls.kind:
            raise DataError(f"expected a {cls.kind!r} checkpoint, got {checkpoint.kind!r}")
        header = checkpoint.header
        try:
            agent = cls(
                SystemSpec.from_dict(header["system"]),
                int(header["window_w"]),
                Scaler(checkpoint.section("scaler.min"), checkpoint.section("scaler.max")),
                checkpoint.section("delta_bounds"),
                SlConfig(**header["sl"]),
                tuple(header["hidden"]),
                int(header.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"incomplete {cls.kind} checkpoint header: {exc}") from exc
        load_module_sections(agent.policy, checkpoint, "actor")
        load_optimizer_sections(agent.optimizer, agent.params, checkpoint, "optim.actor")
        agent.updates = int(header.get("updates", 0))
        agent.config_echo = dict(header.get("config", {}))
        return agent
