"""Fwdlearn System Types

Value types shared by every part of the library: the description of a
reference system, single transitions, episodes, datasets and the min-max
scaler computed from them.

Episodes store their trajectory as two arrays instead of a list of
transition objects. ``states`` has one row more than ``actions``, so the
chaining invariant ``transitions[i].next_state == transitions[i + 1].state``
holds by construction; ``Episode.from_transitions`` checks it when building
from loose transitions.

License: MIT
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from types import MappingProxyType
from typing import Any
from typing import NamedTuple

import numpy as np

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import DataError
from fwdlearn.core.exceptions import ShapeError

__all__ = ["SystemSpec", "Transition", "Episode", "Dataset", "Scaler"]


def _as_tuple(values: Sequence[float] | float, size: int, name: str) -> tuple[float, ...]:
    if np.ndim(values) == 0:
        return (float(values),) * size
    values = tuple(float(v) for v in values)
    if len(values) != size:
        raise ConfigError(f"{name} has {len(values)} entries, expected {size}")
    return values


@dataclass(frozen=True)
class SystemSpec:
    """Description of a reference dynamical system.

    The state vector is laid out as ``[qpos..., qvel...]`` with ``n_pos``
    position entries. Positions listed in ``angle_dims`` are wrapped to
    ``(-pi, pi]``.

    Attributes:
        name: Registry identifier (``"pendulum"``, ``"msd"``).
        state_dim: Number of state entries.
        action_dim: Number of action entries.
        dt: Seconds per step.
        action_low: Lower action bound per dimension.
        action_high: Upper action bound per dimension.
        params: Physical constants by name.
        n_pos: Number of position entries at the start of the state.
        angle_dims: Indices of wrapped position entries.
        init_low: Lower bound of randomized initial states.
        init_high: Upper bound of randomized initial states.
    """

    name: str
    state_dim: int
    action_dim: int
    dt: float
    action_low: tuple[float, ...]
    action_high: tuple[float, ...]
    params: Mapping[str, float] = field(default_factory=dict)
    n_pos: int = 1
    angle_dims: tuple[int, ...] = ()
    init_low: tuple[float, ...] = ()
    init_high: tuple[float, ...] = ()

    def __post_init__(self):
        if self.state_dim < 1:
            raise ConfigError(f"state_dim must be >= 1, got {self.state_dim}")
        if self.action_dim < 1:
            raise ConfigError(f"action_dim must be >= 1, got {self.action_dim}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not 1 <= self.n_pos <= self.state_dim:
            raise ConfigError(f"n_pos must lie in [1, state_dim], got {self.n_pos}")

        low = _as_tuple(self.action_low, self.action_dim, "action_low")
        high = _as_tuple(self.action_high, self.action_dim, "action_high")
        if any(lo >= hi for lo, hi in zip(low, high, strict=True)):
            raise ConfigError(f"action_low must be < action_high elementwise, got {low} / {high}")
        object.__setattr__(self, "action_low", low)
        object.__setattr__(self, "action_high", high)

        init_low = _as_tuple(self.init_low or 0.0, self.state_dim, "init_low")
        init_high = _as_tuple(self.init_high or 0.0, self.state_dim, "init_high")
        object.__setattr__(self, "init_low", init_low)
        object.__setattr__(self, "init_high", init_high)

        angle_dims = tuple(int(i) for i in self.angle_dims)
        if any(not 0 <= i < self.n_pos for i in angle_dims):
            raise ConfigError(f"angle_dims must index position entries, got {angle_dims}")
        object.__setattr__(self, "angle_dims", angle_dims)
        object.__setattr__(self, "params", MappingProxyType({k: float(v) for k, v in dict(self.params).items()}))

    # region Helpers

    @property
    def n_vel(self) -> int:
        return self.state_dim - self.n_pos

    @property
    def frame_dim(self) -> int:
        """Width of one stacked ``(state, action)`` frame."""
        return self.state_dim + self.action_dim

    def angle_mask(self) -> np.ndarray:
        """Boolean mask over position entries, true where wrapped."""
        mask = np.zeros(self.n_pos, dtype=bool)
        mask[list(self.angle_dims)] = True
        return mask

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "dt": self.dt,
            "action_low": list(self.action_low),
            "action_high": list(self.action_high),
            "params": dict(sorted(self.params.items())),
            "n_pos": self.n_pos,
            "angle_dims": list(self.angle_dims),
            "init_low": list(self.init_low),
            "init_high": list(self.init_high),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SystemSpec:
        try:
            return cls(
                name=str(data["name"]),
                state_dim=int(data["state_dim"]),
                action_dim=int(data["action_dim"]),
                dt=float(data["dt"]),
                action_low=tuple(data["action_low"]),
                action_high=tuple(data["action_high"]),
                params=dict(data.get("params", {})),
                n_pos=int(data.get("n_pos", 1)),
                angle_dims=tuple(data.get("angle_dims", ())),
                init_low=tuple(data.get("init_low", ())),
                init_high=tuple(data.get("init_high", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"invalid system description: {exc}") from exc

    # endregion


class Transition(NamedTuple):
    """One ``(s_t, a_t, s_{t+1})`` triple."""

    state: np.ndarray
    action: np.ndarray
    next_state: np.ndarray


class Episode:
    """An ordered run of transitions of one system.

    Attributes:
        states: Array ``[length + 1, state_dim]``.
        actions: Array ``[length, action_dim]``.
    """

    __slots__ = ("states", "actions")

    def __init__(self, states: np.ndarray, actions: np.ndarray):
        states = np.array(states, dtype=np.float64, copy=True)
        actions = np.array(actions, dtype=np.float64, copy=True)
        if states.ndim != 2 or actions.ndim != 2:
            raise ShapeError("states and actions must be 2-D arrays")
        if actions.shape[0] < 1:
            raise DataError("an episode needs at least one transition")
        if states.shape[0] != actions.shape[0] + 1:
            raise ShapeError(f"expected {actions.shape[0] + 1} states for {actions.shape[0]} actions, got {states.shape[0]}")
        if not (np.all(np.isfinite(states)) and np.all(np.isfinite(actions))):
            raise DataError("episode contains non-finite entries")
        states.setflags(write=False)
        actions.setflags(write=False)
        self.states = states
        self.actions = actions

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition], atol: float = 0.0) -> Episode:
        """Build an episode, checking that consecutive transitions chain."""
        if not transitions:
            raise DataError("an episode needs at least one transition")
        for i in range(len(transitions) - 1):
            if not np.allclose(transitions[i].next_state, transitions[i + 1].state, rtol=0.0, atol=atol):
                raise DataError(f"transition {i} does not chain into transition {i + 1}")
        states = [t.state for t in transitions] + [transitions[-1].next_state]
        return cls(np.asarray(states), np.asarray([t.action for t in transitions]))

    @property
    def length(self) -> int:
        return self.actions.shape[0]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def action_dim(self) -> int:
        return self.actions.shape[1]

    @property
    def transitions(self) -> list[Transition]:
        return list(self.iter_transitions())

    def iter_transitions(self) -> Iterator[Transition]:
        for t in range(self.length):
            yield Transition(self.states[t], self.actions[t], self.states[t + 1])

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Episode):
            return NotImplemented
        return np.array_equal(self.states, other.states) and np.array_equal(self.actions, other.actions)

    def __repr__(self) -> str:
        return f"Episode(length={self.length}, state_dim={self.state_dim}, action_dim={self.action_dim})"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Episodes of one system plus the behavior policy that produced each one."""

    system: SystemSpec
    episodes: tuple[Episode, ...]
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        episodes = tuple(self.episodes)
        provenance = tuple(self.provenance) or ("unknown",) * len(episodes)
        if len(provenance) != len(episodes):
            raise DataError(f"{len(provenance)} provenance tags for {len(episodes)} episodes")
        for i, episode in enumerate(episodes):
            if episode.state_dim != self.system.state_dim or episode.action_dim != self.system.action_dim:
                raise ShapeError(
                    f"episode {i} has dims ({episode.state_dim}, {episode.action_dim}), "
                    f"system {self.system.name!r} has ({self.system.state_dim}, {self.system.action_dim})"
                )
        object.__setattr__(self, "episodes", episodes)
        object.__setattr__(self, "provenance", provenance)

    @property
    def lengths(self) -> list[int]:
        return [episode.length for episode in self.episodes]

    def subset(self, indices: Sequence[int]) -> Dataset:
        return Dataset(self.system, tuple(self.episodes[i] for i in indices), tuple(self.provenance[i] for i in indices))

    def __len__(self) -> int:
        return len(self.episodes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.system == other.system
            and self.provenance == other.provenance
            and len(self.episodes) == len(other.episodes)
            and all(a == b for a, b in zip(self.episodes, other.episodes, strict=True))
        )

    def __repr__(self) -> str:
        return f"Dataset(system={self.system.name!r}, episodes={len(self.episodes)})"


class Scaler:
    """Per-dimension min-max scaler.

    ``scale(x) = (x - min) / (max - min)``, and 0 where ``max == min``.
    """

    __slots__ = ("min", "max")

    def __init__(self, min: np.ndarray, max: np.ndarray):  # noqa: A002
        lo = np.array(min, dtype=np.float64, copy=True).reshape(-1)
        hi = np.array(max, dtype=np.float64, copy=True).reshape(-1)
        if lo.shape != hi.shape:
            raise ShapeError(f"scaler bounds differ in shape: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise DataError("scaler min must be <= max elementwise")
        self.min = lo
        self.max = hi

    @property
    def range(self) -> np.ndarray:
        return self.max - self.min

    def inverse_range(self) -> np.ndarray:
        span = self.range
        out = np.zeros_like(span)
        np.divide(1.0, span, out=out, where=span > 0)
        return out

    def scale(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.min.shape[0]:
            raise ShapeError(f"expected last dimension {self.min.shape[0]}, got {x.shape[-1]}")
        return (x - self.min) * self.inverse_range()

    def tile(self, repeats: int) -> Scaler:
        """Scaler for ``repeats`` concatenated copies of the same layout."""
        return Scaler(np.tile(self.min, repeats), np.tile(self.max, repeats))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scaler):
            return NotImplemented
        return np.array_equal(self.min, other.min) and np.array_equal(self.max, other.max)

    def __repr__(self) -> str:
        return f"Scaler(dims={self.min.shape[0]})"
