"""Fwdlearn Behavior Policies

Open-loop action generators used to excite the reference systems when
building datasets. Each episode gets a fresh policy instance drawing from the
episode's own random stream.

Available policies:
    - random     uniform action in bounds at every step
    - sinusoid   sine sweep whose frequency rises linearly over the episode
    - bang_bang  full positive or negative action held for a random number of steps

License: MIT
"""

from __future__ import annotations

import math
from abc import ABC
from abc import abstractmethod

import numpy as np

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.systems.base import SystemSpec

__all__ = ["BehaviorPolicy", "RandomPolicy", "SinusoidPolicy", "BangBangPolicy", "BEHAVIORS", "make_behavior"]


class BehaviorPolicy(ABC):
    """Produces one action per step for a single episode."""

    name: str = ""

    def __init__(self, spec: SystemSpec, rng: np.random.Generator, horizon: int):
        self.spec = spec
        self.rng = rng
        self.horizon = horizon
        self.low = np.asarray(spec.action_low)
        self.high = np.asarray(spec.action_high)

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.low + self.high)

    @property
    def half(self) -> np.ndarray:
        return 0.5 * (self.high - self.low)

    @abstractmethod
    def __call__(self, t: int, state: np.ndarray) -> np.ndarray:
        """Action for step *t* given the current *state*."""


class RandomPolicy(BehaviorPolicy):
    name = "random"

    def __call__(self, t: int, state: np.ndarray) -> np.ndarray:
        return self.rng.uniform(self.low, self.high)


class SinusoidPolicy(BehaviorPolicy):
    """Linear chirp between ``f0`` and ``f1`` Hz with random phase and amplitude."""

    name = "sinusoid"

    def __init__(self, spec: SystemSpec, rng: np.random.Generator, horizon: int):
        super().__init__(spec, rng, horizon)
        dim = spec.action_dim
        self.f0 = rng.uniform(0.05, 0.3, size=dim)
        self.f1 = rng.uniform(0.5, 2.0, size=dim)
        self.phase = rng.uniform(0.0, 2.0 * math.pi, size=dim)
        self.amplitude = rng.uniform(0.5, 1.0, size=dim)

    def __call__(self, t: int, state: np.ndarray) -> np.ndarray:
        duration = max(self.horizon, 1) * self.spec.dt
        time = t * self.spec.dt
        # instantaneous phase of a linear chirp
        rate = (self.f1 - self.f0) / duration
        angle = 2.0 * math.pi * (self.f0 * time + 0.5 * rate * time**2) + self.phase
        return self.mid + self.amplitude * self.half * np.sin(angle)


class BangBangPolicy(BehaviorPolicy):
    """Saturated action switching sign after holds of 5 to 30 steps."""

    name = "bang_bang"

    def __init__(self, spec: SystemSpec, rng: np.random.Generator, horizon: int):
        super().__init__(spec, rng, horizon)
        self._sign = rng.choice([-1.0, 1.0], size=spec.action_dim)
        self._remaining = int(rng.integers(5, 31))

    def __call__(self, t: int, state: np.ndarray) -> np.ndarray:
        if self._remaining <= 0:
            self._sign = -self._sign
            self._remaining = int(self.rng.integers(5, 31))
        self._remaining -= 1
        return self.mid + self._sign * self.half


BEHAVIORS: dict[str, type[BehaviorPolicy]] = {
    RandomPolicy.name: RandomPolicy,
    SinusoidPolicy.name: SinusoidPolicy,
    BangBangPolicy.name: BangBangPolicy,
}


def make_behavior(name: str, spec: SystemSpec, rng: np.random.Generator, horizon: int) -> BehaviorPolicy:
    """Instantiate the behavior policy *name*.

    Raises:
        ConfigError: If *name* is not registered.
    """
    try:
        cls = BEHAVIORS[name]
    except KeyError as exc:
        raise ConfigError(f"unknown behavior policy {name!r}; choose from {sorted(BEHAVIORS)}") from exc
    return cls(spec, rng, horizon)
