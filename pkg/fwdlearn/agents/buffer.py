"""Fwdlearn Replay Buffer

Bounded FIFO store of forward-model transitions for off-policy updates.
Storage grows on demand up to ``capacity`` and then behaves as a ring.

License: MIT
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import ContractViolation
from fwdlearn.core.exceptions import ShapeError

__all__ = ["Batch", "ReplayBuffer"]


class Batch(NamedTuple):
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    terminal: np.ndarray


class ReplayBuffer:
    """Ring buffer of ``(obs, action, reward, next_obs, terminal)`` tuples.

    Args:
        capacity: Maximum number of transitions kept; the oldest are evicted.
        obs_dim: Width of a flattened stacked observation.
        action_dim: Width of a delta action.
    """

    _INITIAL = 1024

    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        if capacity < 1:
            raise ConfigError(f"buffer capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.obs_dim = int(obs_dim)
        self.action_dim = int(action_dim)
        self._size = 0
        self._next = 0
        self._store = self._empty(min(self.capacity, self._INITIAL))

    def _empty(self, n: int) -> Batch:
        return Batch(
            np.zeros((n, self.obs_dim)),
            np.zeros((n, self.action_dim)),
            np.zeros(n),
            np.zeros((n, self.obs_dim)),
            np.zeros(n, dtype=bool),
        )

    @property
    def allocated(self) -> int:
        return len(self._store.reward)

    def _grow(self) -> None:
        bigger = self._empty(min(self.capacity, 2 * self.allocated))
        for new, old in zip(bigger, self._store, strict=True):
            new[: self._size] = old[: self._size]
        self._store = bigger

    def push(self, obs, action, reward: float, next_obs, terminal: bool) -> None:
        """Append one transition, evicting the oldest at capacity."""
        obs = np.asarray(obs, dtype=np.float64).reshape(-1)
        next_obs = np.asarray(next_obs, dtype=np.float64).reshape(-1)
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if obs.shape != (self.obs_dim,) or next_obs.shape != (self.obs_dim,) or action.shape != (self.action_dim,):
            raise ShapeError(
                f"transition shapes obs={obs.shape} action={action.shape} next_obs={next_obs.shape} "
                f"do not match buffer ({self.obs_dim}, {self.action_dim})"
            )
        if self._next == self.allocated and self.allocated < self.capacity:
            self._grow()
        i = self._next
        store = self._store
        store.obs[i] = obs
        store.action[i] = action
        store.reward[i] = reward
        store.next_obs[i] = next_obs
        store.terminal[i] = terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def extend(self, transitions) -> None:
        for transition in transitions:
            self.push(*transition)

    def _order(self) -> np.ndarray:
        """Storage indices from oldest to newest."""
        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self._size) + self._next) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform batch of distinct transitions.

        Raises:
            ContractViolation: If fewer than *batch_size* transitions are stored.
        """
        if batch_size > self._size:
            raise ContractViolation(f"cannot sample {batch_size} transitions from a buffer of {self._size}")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return self._gather(idx)

    def _gather(self, idx: np.ndarray) -> Batch:
        return Batch(*(column[idx].copy() for column in self._store))

    def contents(self) -> Batch:
        """All stored transitions, oldest first."""
        return self._gather(self._order())

    def __len__(self) -> int:
        return self._size

    def __repr__(self) -> str:
        return f"ReplayBuffer(size={self._size}, capacity={self.capacity})"
