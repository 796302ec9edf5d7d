"""Fwdlearn Forward Policy

The forward model itself: a squashed-Gaussian actor that maps a stacked
observation to a bounded position increment. The RL agent and the
supervised baseline use the same class, so both share one architecture and
one input pipeline.

Pipeline:
    1. min-max scale every stacked frame with the dataset scaler
    2. Mlp -> ``(mean, log_std)`` per position dimension
    3. ``delta = bound * tanh(u)``, ``u = mean`` (greedy) or ``u ~ N(mean, std)``

License: MIT
"""

from __future__ import annotations

import hashlib
import json

import numpy as np
import torch
from torch import nn

from fwdlearn.nn.heads import GaussianHeadOutput
from fwdlearn.nn.heads import gaussian_head
from fwdlearn.nn.heads import squashed_gaussian_sample
from fwdlearn.nn.mlp import DTYPE
from fwdlearn.nn.mlp import Mlp
from fwdlearn.nn.mlp import MlpSpec
from fwdlearn.systems.base import Scaler
from fwdlearn.systems.base import SystemSpec

__all__ = ["ForwardPolicy", "FINAL_LAYER_SCALE", "policy_sections"]

FINAL_LAYER_SCALE = 0.01


class ForwardPolicy(nn.Module):
    """Squashed-Gaussian forward-model policy.

    Args:
        system: The modelled system.
        window_w: Number of stacked frames in an observation.
        scaler: Per-frame min-max scaler over ``state_dim + action_dim`` entries.
        bounds: Symmetric delta bound per position dimension.
        hidden: Hidden layer widths.
        generator: Initialization randomness.
    """

    def __init__(
        self,
        system: SystemSpec,
        window_w: int,
        scaler: Scaler,
        bounds: np.ndarray,
        hidden: tuple[int, ...] = (64, 64),
        generator: torch.Generator | None = None,
    ):
        super().__init__()
        self.system = system
        self.window_w = int(window_w)
        self.scaler = scaler
        obs_dim = self.window_w * system.frame_dim
        self.mlp_spec = MlpSpec(obs_dim, 2 * system.n_pos, tuple(hidden))
        self.body = Mlp(self.mlp_spec, generator=generator, final_scale=FINAL_LAYER_SCALE)

        tiled = scaler.tile(self.window_w)
        self.register_buffer("obs_min", torch.as_tensor(tiled.min, dtype=DTYPE))
        self.register_buffer("obs_inv_range", torch.as_tensor(tiled.inverse_range(), dtype=DTYPE))
        self.register_buffer("bound", torch.as_tensor(np.asarray(bounds, dtype=np.float64), dtype=DTYPE))

    @property
    def obs_dim(self) -> int:
        return self.mlp_spec.in_dim

    @property
    def action_dim(self) -> int:
        return self.system.n_pos

    def descriptor(self) -> dict:
        return {
            "mlp": self.mlp_spec.to_dict(),
            "window_w": self.window_w,
            "system": self.system.name,
            "input": "minmax",
            "head": "squashed_gaussian",
        }

    def descriptor_hash(self) -> str:
        """Digest of the architecture and input pipeline."""
        return hashlib.sha256(json.dumps(self.descriptor(), sort_keys=True).encode("utf-8")).hexdigest()

    # ─────────────────────────────────────────────────
    # Torch paths
    # ─────────────────────────────────────────────────

    def scale_obs(self, obs: torch.Tensor) -> torch.Tensor:
        return (obs - self.obs_min) * self.obs_inv_range

    def head(self, obs: torch.Tensor) -> GaussianHeadOutput:
        return gaussian_head(self.body(self.scale_obs(obs)))

    def sample(self, obs: torch.Tensor, generator: torch.Generator | None = None, deterministic: bool = False):
        """Reparameterized ``(delta, log_prob)``."""
        return squashed_gaussian_sample(self.head(obs), -self.bound, self.bound, generator, deterministic)

    def mean_unit(self, obs: torch.Tensor) -> torch.Tensor:
        """``tanh(mean)``: the greedy delta divided by the bound."""
        return torch.tanh(self.head(obs).mean)

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        return self.bound * self.mean_unit(obs)

    def mse(self, obs: torch.Tensor, deltas: torch.Tensor) -> torch.Tensor:
        """One-step regression loss ``mean((tanh(mean) - delta / bound) ** 2)``."""
        return torch.mean((self.mean_unit(obs) - deltas / self.bound) ** 2)

    # ─────────────────────────────────────────────────
    # Numpy path
    # ─────────────────────────────────────────────────

    @torch.no_grad()
    def act(self, obs: np.ndarray, explore: bool = False, generator: torch.Generator | None = None) -> np.ndarray:
        """Delta for one observation (or a batch) as a numpy array."""
        x = torch.as_tensor(np.asarray(obs, dtype=np.float64), dtype=DTYPE)
        if explore:
            delta, _ = self.sample(x, generator)
        else:
            delta = self(x)
        return delta.numpy().copy()


def policy_sections(policy: ForwardPolicy) -> dict[str, np.ndarray]:
    """Checkpoint sections describing the policy's input pipeline."""
    return {
        "scaler.min": policy.scaler.min.copy(),
        "scaler.max": policy.scaler.max.copy(),
        "delta_bounds": policy.bound.detach().numpy().copy(),
    }
