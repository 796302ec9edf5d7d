"""Fwdlearn Feed-Forward Networks

Float64 multilayer perceptrons with Mish hidden activations and an identity
output layer. Actor, critics and the supervised baseline are all built from
:class:`Mlp`.

License: MIT
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import ShapeError

__all__ = ["DTYPE", "mish", "MlpSpec", "Mlp"]

DTYPE = torch.float64


def mish(x):
    """``x * tanh(softplus(x))``.

    Accepts a tensor or a Python number; ``softplus`` is evaluated in its
    overflow-safe form.
    """
    if isinstance(x, torch.Tensor):
        return x * torch.tanh(F.softplus(x))
    value = float(x)
    softplus = max(value, 0.0) + math.log1p(math.exp(-abs(value)))
    return value * math.tanh(softplus)


@dataclass(frozen=True)
class MlpSpec:
    """Architecture descriptor of an :class:`Mlp`."""

    in_dim: int
    out_dim: int
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "mish"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.in_dim < 1 or self.out_dim < 1 or any(h < 1 for h in self.hidden):
            raise ConfigError(f"layer widths must be positive: {self}")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.in_dim, *self.hidden, self.out_dim)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["hidden"] = list(self.hidden)
        return data

    def descriptor_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()


class Mlp(nn.Module):
    """Affine chain with Mish between layers.

    Args:
        spec: Layer widths.
        generator: Source of the initial weights.
        final_scale: Multiplier applied to the last layer after initialization.
    """

    def __init__(self, spec: MlpSpec, generator: torch.Generator | None = None, final_scale: float = 1.0):
        super().__init__()
        self.spec = spec
        widths = spec.widths
        self.layers = nn.ModuleList(nn.Linear(a, b, dtype=DTYPE) for a, b in zip(widths[:-1], widths[1:], strict=True))
        self.reset_parameters(generator, final_scale)

    @torch.no_grad()
    def reset_parameters(self, generator: torch.Generator | None = None, final_scale: float = 1.0) -> None:
        """Uniform fan-in initialization ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``."""
        for layer in self.layers:
            bound = 1.0 / math.sqrt(layer.in_features)
            layer.weight.uniform_(-bound, bound, generator=generator)
            layer.bias.uniform_(-bound, bound, generator=generator)
        last = self.layers[-1]
        last.weight.mul_(final_scale)
        last.bias.mul_(final_scale)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.spec.in_dim:
            raise ShapeError(f"expected input width {self.spec.in_dim}, got {x.shape[-1]}")
        for layer in self.layers[:-1]:
            x = mish(layer(x))
        return self.layers[-1](x)

    def extra_repr(self) -> str:
        return f"widths={self.spec.widths}"
