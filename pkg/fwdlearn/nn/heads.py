"""Fwdlearn Network Heads

Output heads on top of :class:`~fwdlearn.nn.mlp.Mlp`:

    - squashed Gaussian policy head: ``a = low + (tanh(u) + 1) / 2 * (high - low)``
    - quantile value head trained with the quantile Huber loss at the
      midpoint fractions ``tau_i = (2i - 1) / (2N)``

License: MIT
"""

from __future__ import annotations

import math
from typing import NamedTuple

import torch
import torch.nn.functional as F

__all__ = [
    "LOG_STD_MIN",
    "LOG_STD_MAX",
    "TANH_EPS",
    "GaussianHeadOutput",
    "gaussian_head",
    "squash",
    "squashed_gaussian_sample",
    "squashed_log_prob",
    "quantile_fractions",
    "quantile_huber_loss",
]

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
TANH_EPS = 1e-6
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class GaussianHeadOutput(NamedTuple):
    mean: torch.Tensor
    log_std: torch.Tensor

    @property
    def std(self) -> torch.Tensor:
        return self.log_std.exp()


def gaussian_head(raw: torch.Tensor) -> GaussianHeadOutput:
    """Split ``[..., 2k]`` network output into mean and clamped log-std."""
    mean, log_std = raw.chunk(2, dim=-1)
    return GaussianHeadOutput(mean, log_std.clamp(LOG_STD_MIN, LOG_STD_MAX))


def squash(u: torch.Tensor, low: torch.Tensor, high: torch.Tensor) -> torch.Tensor:
    return low + (torch.tanh(u) + 1.0) * 0.5 * (high - low)


def _log_prob(head: GaussianHeadOutput, u: torch.Tensor, low: torch.Tensor, high: torch.Tensor) -> torch.Tensor:
    z = (u - head.mean) / head.std
    gaussian = -0.5 * z**2 - head.log_std - _HALF_LOG_2PI
    correction = torch.log(1.0 - torch.tanh(u) ** 2 + TANH_EPS)
    scale = torch.log((high - low) * 0.5)
    return (gaussian - correction - scale).sum(dim=-1)


def squashed_gaussian_sample(
    head: GaussianHeadOutput,
    low: torch.Tensor,
    high: torch.Tensor,
    generator: torch.Generator | None = None,
    deterministic: bool = False,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Draw a bounded action and its log-density.

    The sample is reparameterized, so gradients flow to the head.

    Returns:
        ``(action, log_prob)`` with ``log_prob`` summed over action dimensions.
    """
    if deterministic:
        u = head.mean
    else:
        noise = torch.randn(head.mean.shape, generator=generator, dtype=head.mean.dtype)
        u = head.mean + head.std * noise
    return squash(u, low, high), _log_prob(head, u, low, high)


def squashed_log_prob(head: GaussianHeadOutput, action: torch.Tensor, low: torch.Tensor, high: torch.Tensor) -> torch.Tensor:
    """Log-density of a bounded *action* (strictly inside the bounds)."""
    unit = 2.0 * (action - low) / (high - low) - 1.0
    return _log_prob(head, torch.atanh(unit), low, high)


def quantile_fractions(n: int, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    return (2.0 * torch.arange(1, n + 1, dtype=dtype) - 1.0) / (2.0 * n)


def quantile_huber_loss(
    pred: torch.Tensor,
    targets: torch.Tensor,
    kappa: float = 1.0,
    taus: torch.Tensor | None = None,
) -> torch.Tensor:
    """Quantile Huber loss averaged over batch and every ``(quantile, target)`` pair.

    Args:
        pred: Predicted quantiles ``[N]`` or ``[B, N]``.
        targets: Target samples ``[M]`` or ``[B, M]``.
        kappa: Huber threshold.
        taus: Quantile fractions ``[N]``; midpoints when omitted.
    """
    pred = torch.atleast_2d(pred)
    targets = torch.atleast_2d(targets)
    if taus is None:
        taus = quantile_fractions(pred.shape[-1], pred.dtype)
    # u[b, i, j] = target_j - pred_i
    u = targets.unsqueeze(-2) - pred.unsqueeze(-1)
    huber = F.huber_loss(u, torch.zeros_like(u), reduction="none", delta=kappa) / kappa
    weight = (taus.reshape(1, -1, 1) - (u.detach() < 0).to(u.dtype)).abs()
    return (weight * huber).mean()
