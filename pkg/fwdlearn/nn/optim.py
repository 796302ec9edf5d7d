"""Fwdlearn Gradients and Optimizer

Reverse-mode gradients through ``torch.autograd`` and an Adam step over an
explicit gradient list. Non-finite losses raise :class:`TrainingFault` with
the loss value and parameter norms.

License: MIT
"""

from __future__ import annotations

from collections.abc import Callable
from collections.abc import Sequence
from typing import Any

import torch

from fwdlearn.core.exceptions import TrainingFault

__all__ = ["value_and_grad", "grad", "make_adam", "adam_step", "ensure_finite"]


def ensure_finite(loss: torch.Tensor, params: Sequence[torch.Tensor], what: str = "loss") -> None:
    """Raise :class:`TrainingFault` when *loss* is NaN or infinite."""
    if not torch.isfinite(loss).all():
        norms = [float(p.detach().norm()) for p in params]
        raise TrainingFault(f"non-finite {what}={float(loss)} param_norms={[round(n, 6) for n in norms]}")


def value_and_grad(
    params: Sequence[torch.Tensor],
    loss_fn: Callable[[Any], torch.Tensor],
    batch: Any = None,
    what: str = "loss",
) -> tuple[float, list[torch.Tensor]]:
    """Evaluate ``loss_fn(batch)`` and its gradient with respect to *params*.

    Parameters the loss does not depend on get a zero gradient.

    Raises:
        TrainingFault: If the loss is not finite.
    """
    params = list(params)
    loss = loss_fn(batch)
    ensure_finite(loss, params, what)
    if not loss.requires_grad:
        return float(loss), [torch.zeros_like(p) for p in params]
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return float(loss), [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads, strict=True)]


def grad(params: Sequence[torch.Tensor], loss_fn: Callable[[Any], torch.Tensor], batch: Any = None) -> list[torch.Tensor]:
    """Gradient of ``loss_fn(batch)`` with respect to *params*."""
    return value_and_grad(params, loss_fn, batch)[1]


def make_adam(
    params: Sequence[torch.Tensor],
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> torch.optim.Adam:
    return torch.optim.Adam(list(params), lr=lr, betas=betas, eps=eps, foreach=False)


@torch.no_grad()
def adam_step(optimizer: torch.optim.Adam, params: Sequence[torch.Tensor], grads: Sequence[torch.Tensor]) -> None:
    """Apply one bias-corrected Adam update with the given gradients."""
    for p, g in zip(params, grads, strict=True):
        p.grad = g.detach().clone()
    optimizer.step()
    for p in params:
        p.grad = None
