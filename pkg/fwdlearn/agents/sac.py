"""Fwdlearn Soft Actor-Critic

SAC specialised for the forward-model environment:

    - actor: :class:`~fwdlearn.agents.policy.ForwardPolicy`
    - twin quantile critics ``Z(obs, delta)`` with ``n_quantiles`` outputs each,
      plus target copies updated by Polyak averaging
    - entropy temperature ``alpha = exp(log_alpha)`` tuned towards ``target_entropy``

Critic target (per sample): the target critic whose mean quantile is lower
provides the quantile vector, and
``y = r + gamma * (1 - terminal) * (z' - alpha * log pi(a'|s'))``.
Both critics regress ``y`` with the quantile Huber loss. The actor minimises
``alpha * log pi - min_k mean(Z_k)``.

Example:
    agent = SacAgent(system, window_w=10, scaler=scaler, bounds=bounds, config=SacConfig(batch_size=256))
    delta = agent.sample_action(obs, explore=True)
    result = agent.update(buffer)

License: MIT
"""

from __future__ import annotations

import copy
import logging
from dataclasses import asdict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import torch
from torch import nn

from fwdlearn.agents.buffer import Batch
from fwdlearn.agents.buffer import ReplayBuffer
from fwdlearn.agents.policy import ForwardPolicy
from fwdlearn.agents.policy import policy_sections
from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import DataError
from fwdlearn.nn.checkpoint import Checkpoint
from fwdlearn.nn.checkpoint import load_module_sections
from fwdlearn.nn.checkpoint import load_optimizer_sections
from fwdlearn.nn.checkpoint import module_sections
from fwdlearn.nn.checkpoint import optimizer_sections
from fwdlearn.nn.heads import quantile_huber_loss
from fwdlearn.nn.mlp import DTYPE
from fwdlearn.nn.mlp import Mlp
from fwdlearn.nn.mlp import MlpSpec
from fwdlearn.nn.optim import adam_step
from fwdlearn.nn.optim import make_adam
from fwdlearn.nn.optim import value_and_grad
from fwdlearn.systems.base import Scaler
from fwdlearn.systems.base import SystemSpec
from fwdlearn.utils.seeding import numpy_rng
from fwdlearn.utils.seeding import torch_generator

__all__ = ["SacConfig", "QuantileCritic", "UpdateResult", "SacAgent", "soft_update"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SacConfig:
    """SAC hyperparameters.

    ``target_entropy=None`` means ``-action_dim``. ``gamma`` may be 0 for
    one-step sanity problems.
    """

    batch_size: int = 1024
    n_quantiles: int = 64
    gamma: float = 0.99
    tau: float = 0.005
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    lr_alpha: float = 3e-4
    target_entropy: float | None = None
    updates_per_episode: int = 10
    buffer_capacity: int = 1_000_000
    kappa: float = 1.0
    init_alpha: float = 1.0

    def __post_init__(self):
        for name in ("batch_size", "n_quantiles", "updates_per_episode", "buffer_capacity"):
            if getattr(self, name) < 1:
                raise ConfigError(f"sac.{name} must be >= 1, got {getattr(self, name)}")
        for name in ("lr_actor", "lr_critic", "lr_alpha", "kappa", "init_alpha"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"sac.{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"sac.gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"sac.tau must lie in (0, 1], got {self.tau}")

    def to_dict(self) -> dict:
        return asdict(self)


class QuantileCritic(nn.Module):
    """``Z(obs, delta)``: ``n_quantiles`` return quantiles.

    Observations are min-max scaled like the actor's; deltas are divided by
    their bound.
    """

    def __init__(self, policy: ForwardPolicy, n_quantiles: int, hidden: tuple[int, ...], generator=None):
        super().__init__()
        self.mlp_spec = MlpSpec(policy.obs_dim + policy.action_dim, n_quantiles, tuple(hidden))
        self.body = Mlp(self.mlp_spec, generator=generator)
        self.register_buffer("obs_min", policy.obs_min.clone())
        self.register_buffer("obs_inv_range", policy.obs_inv_range.clone())
        self.register_buffer("bound", policy.bound.clone())

    def forward(self, obs: torch.Tensor, delta: torch.Tensor) -> torch.Tensor:
        x = torch.cat([(obs - self.obs_min) * self.obs_inv_range, delta / self.bound], dim=-1)
        return self.body(x)


class UpdateResult(NamedTuple):
    critic_loss: float | None
    actor_loss: float | None
    alpha_loss: float | None
    alpha: float
    skipped: bool


@torch.no_grad()
def soft_update(target: nn.Module, online: nn.Module, tau: float) -> None:
    """``target <- (1 - tau) * target + tau * online`` for every parameter."""
    for t, p in zip(target.parameters(), online.parameters(), strict=True):
        t.mul_(1.0 - tau).add_(p, alpha=tau)


class SacAgent:
    """Soft actor-critic over the forward-model environment.

    Args:
        system: The modelled system.
        window_w: Stacked frames per observation.
        scaler: Frame scaler shared by actor and critics.
        bounds: Delta bound per position dimension.
        config: Hyperparameters.
        hidden: Hidden widths of every network.
        seed: Seed of initialization, action noise and batch sampling.
    """

    kind = "sac"

    def __init__(
        self,
        system: SystemSpec,
        window_w: int,
        scaler: Scaler,
        bounds: np.ndarray,
        config: SacConfig | None = None,
        hidden: tuple[int, ...] = (64, 64),
        seed: int = 0,
    ):
        self.config = config or SacConfig()
        self.hidden = tuple(hidden)
        self.seed = int(seed)
        init = torch_generator(seed, "init")
        self.actor = ForwardPolicy(system, window_w, scaler, bounds, self.hidden, generator=init)
        self.critics = nn.ModuleList(
            QuantileCritic(self.actor, self.config.n_quantiles, self.hidden, generator=init) for _ in range(2)
        )
        self.target_critics = copy.deepcopy(self.critics)
        for p in self.target_critics.parameters():
            p.requires_grad_(False)
        self.log_alpha = torch.tensor([np.log(self.config.init_alpha)], dtype=DTYPE, requires_grad=True)

        self.actor_params = list(self.actor.parameters())
        self.critic_params = list(self.critics.parameters())
        self.actor_optimizer = make_adam(self.actor_params, self.config.lr_actor)
        self.critic_optimizer = make_adam(self.critic_params, self.config.lr_critic)
        self.alpha_optimizer = make_adam([self.log_alpha], self.config.lr_alpha)

        self.noise = torch_generator(seed, "noise")
        self.rng = numpy_rng(seed, "batches")
        self.updates = 0
        self.config_echo: dict = {}

    # ─────────────────────────────────────────────────
    # Properties
    # ─────────────────────────────────────────────────

    @property
    def system(self) -> SystemSpec:
        return self.actor.system

    @property
    def policy(self) -> ForwardPolicy:
        return self.actor

    @property
    def alpha(self) -> float:
        return float(self.log_alpha.detach().exp())

    @property
    def target_entropy(self) -> float:
        if self.config.target_entropy is not None:
            return float(self.config.target_entropy)
        return -float(self.actor.action_dim)

    # ─────────────────────────────────────────────────
    # Acting
    # ─────────────────────────────────────────────────

    def sample_action(self, obs: np.ndarray, explore: bool = False, generator: torch.Generator | None = None) -> np.ndarray:
        """Stochastic squashed-Gaussian delta when exploring, ``bound * tanh(mean)`` otherwise."""
        return self.actor.act(obs, explore=explore, generator=generator or self.noise)

    def act(self, obs: np.ndarray, explore: bool = False) -> np.ndarray:
        return self.sample_action(obs, explore)

    # ─────────────────────────────────────────────────
    # Learning
    # ─────────────────────────────────────────────────

    def _tensors(self, batch: Batch) -> tuple[torch.Tensor, ...]:
        return tuple(torch.as_tensor(np.asarray(column, dtype=np.float64), dtype=DTYPE) for column in batch)

    def critic_target(self, reward: torch.Tensor, next_obs: torch.Tensor, terminal: torch.Tensor) -> torch.Tensor:
        """Distributional Bellman target ``[B, n_quantiles]``."""
        with torch.no_grad():
            next_delta, next_log_prob = self.actor.sample(next_obs, self.noise)
            z1 = self.target_critics[0](next_obs, next_delta)
            z2 = self.target_critics[1](next_obs, next_delta)
            pick_first = (z1.mean(dim=-1) <= z2.mean(dim=-1)).unsqueeze(-1)
            z_next = torch.where(pick_first, z1, z2)
            soft = z_next - self.log_alpha.exp() * next_log_prob.unsqueeze(-1)
            return reward.unsqueeze(-1) + self.config.gamma * (1.0 - terminal).unsqueeze(-1) * soft

    def critic_loss(self, obs, action, target) -> torch.Tensor:
        kappa = self.config.kappa
        return sum(quantile_huber_loss(critic(obs, action), target, kappa) for critic in self.critics)

    def actor_loss(self, obs: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        delta, log_prob = self.actor.sample(obs, self.noise)
        q = torch.min(self.critics[0](obs, delta).mean(dim=-1), self.critics[1](obs, delta).mean(dim=-1))
        return (self.log_alpha.detach().exp() * log_prob - q).mean(), log_prob

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator | None = None) -> UpdateResult:
        """One gradient step for critics, actor and temperature, then a target update.

        Returns a skipped result, leaving the agent untouched, while the buffer
        holds fewer than ``batch_size`` transitions.

        Raises:
            TrainingFault: If any loss is non-finite.
        """
        if len(buffer) < self.config.batch_size:
            return UpdateResult(None, None, None, self.alpha, True)
        batch = buffer.sample(self.config.batch_size, rng or self.rng)
        obs, action, reward, next_obs, terminal = self._tensors(batch)

        target = self.critic_target(reward, next_obs, terminal)
        critic_value, critic_grads = value_and_grad(
            self.critic_params, lambda _: self.critic_loss(obs, action, target), what="critic_loss"
        )
        adam_step(self.critic_optimizer, self.critic_params, critic_grads)

        log_probs: list[torch.Tensor] = []

        def actor_objective(_):
            loss, log_prob = self.actor_loss(obs)
            log_probs.append(log_prob.detach())
            return loss

        actor_value, actor_grads = value_and_grad(self.actor_params, actor_objective, what="actor_loss")
        adam_step(self.actor_optimizer, self.actor_params, actor_grads)

        entropy_gap = log_probs[-1] + self.target_entropy
        alpha_value, alpha_grads = value_and_grad(
            [self.log_alpha], lambda _: -(self.log_alpha * entropy_gap).mean(), what="alpha_loss"
        )
        adam_step(self.alpha_optimizer, [self.log_alpha], alpha_grads)

        soft_update(self.target_critics, self.critics, self.config.tau)
        self.updates += 1
        return UpdateResult(critic_value, actor_value, alpha_value, self.alpha, False)

    # ─────────────────────────────────────────────────
    # Persistence
    # ─────────────────────────────────────────────────

    def checkpoint(self, config_echo: dict | None = None) -> Checkpoint:
        """Snapshot networks, temperature, optimizer moments, scaler and bounds."""
        sections: dict[str, np.ndarray] = {}
        sections.update(module_sections("actor", self.actor))
        for k in range(2):
            sections.update(module_sections(f"critic{k}", self.critics[k]))
            sections.update(module_sections(f"target{k}", self.target_critics[k]))
        sections["log_alpha"] = self.log_alpha.detach().numpy().copy()
        sections.update(optimizer_sections("optim.actor", self.actor_optimizer, self.actor_params))
        sections.update(optimizer_sections("optim.critic", self.critic_optimizer, self.critic_params))
        sections.update(optimizer_sections("optim.alpha", self.alpha_optimizer, [self.log_alpha]))
        sections.update(policy_sections(self.actor))
        header = {
            "kind": self.kind,
            "system": self.system.to_dict(),
            "window_w": self.actor.window_w,
            "hidden": list(self.hidden),
            "seed": self.seed,
            "updates": self.updates,
            "sac": self.config.to_dict(),
            "architecture": self.actor.descriptor(),
            "architecture_hash": self.actor.descriptor_hash(),
            "config": config_echo if config_echo is not None else self.config_echo,
        }
        return Checkpoint(header, sections)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> SacAgent:
        if checkpoint.kind != cls.kind:
            raise DataError(f"expected a {cls.kind!r} checkpoint, got {checkpoint.kind!r}")
        header = checkpoint.header
        try:
            system = SystemSpec.from_dict(header["system"])
            agent = cls(
                system,
                int(header["window_w"]),
                Scaler(checkpoint.section("scaler.min"), checkpoint.section("scaler.max")),
                checkpoint.section("delta_bounds"),
                SacConfig(**header["sac"]),
                tuple(header["hidden"]),
                int(header.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"incomplete {cls.kind} checkpoint header: {exc}") from exc
        load_module_sections(agent.actor, checkpoint, "actor")
        for k in range(2):
            load_module_sections(agent.critics[k], checkpoint, f"critic{k}")
            load_module_sections(agent.target_critics[k], checkpoint, f"target{k}")
        with torch.no_grad():
            agent.log_alpha.copy_(torch.as_tensor(checkpoint.section("log_alpha"), dtype=DTYPE))
        load_optimizer_sections(agent.actor_optimizer, agent.actor_params, checkpoint, "optim.actor")
        load_optimizer_sections(agent.critic_optimizer, agent.critic_params, checkpoint, "optim.critic")
        load_optimizer_sections(agent.alpha_optimizer, [agent.log_alpha], checkpoint, "optim.alpha")
        agent.updates = int(header.get("updates", 0))
        agent.config_echo = dict(header.get("config", {}))
        return agent
