"""Fwdlearn Forward-Model Environment

A dataset-replay environment in which learning a forward model becomes a
reinforcement-learning problem:

    - observations are stacks of the last ``window_w`` ``(state, action)`` frames
    - actions are predicted position increments ``delta qpos``
    - rewards are prediction-error signals against the recorded trajectory

The environment walks along one recorded episode. Each step integrates the
agent's delta from the newest stacked state (which is itself a prediction
after the first step), pushes the predicted state together with the
*recorded* action, and compares against the recorded next state. Every
``rollout_h`` steps the newest stacked state is replaced with the recorded
one, so rollouts are re-grounded on the truth.

Rewards:
    - ``pseudo_sparse``: ``-||s - s_hat||`` per step, ``1 - z_e`` over the
      finished rollout segment at rollout ends
    - ``fully_sparse``: 0 per step, the configured similarity reward at rollout ends

Example:
    env = ForwardModelEnv(dataset, FwdEnvConfig(window_w=10, rollout_h=50))
    obs, info = env.reset(seed=0)
    obs, reward, terminated, truncated, info = env.step(env.action_space.sample())

License: MIT
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass
from dataclasses import field
from typing import Any

import gymnasium as gym
import numpy as np

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import ContractViolation
from fwdlearn.core.exceptions import EmptyDatasetError
from fwdlearn.core.exceptions import EnvironmentFault
from fwdlearn.core.exceptions import ShapeError
from fwdlearn.metrics.similarity import SIMILARITIES
from fwdlearn.metrics.similarity import similarity_reward
from fwdlearn.systems.base import Dataset
from fwdlearn.systems.base import Episode
from fwdlearn.systems.base import SystemSpec
from fwdlearn.systems.dynamics import wrap_angle

__all__ = [
    "REWARD_MODES",
    "FwdEnvConfig",
    "StackedObservation",
    "RolloutState",
    "ForwardModelEnv",
    "split_state",
    "join_state",
    "integrate_delta",
    "position_deltas",
    "delta_bounds",
    "true_window",
    "reward_fn",
]

logger = logging.getLogger(__name__)

REWARD_MODES = ("pseudo_sparse", "fully_sparse")


@dataclass(frozen=True)
class FwdEnvConfig:
    """Settings of the forward-model environment.

    Attributes:
        window_w: Number of stacked ``(state, action)`` frames.
        rollout_h: Steps per rollout segment before re-grounding.
        start_offset_max: Upper bound of the random start index.
        reward_mode: ``"pseudo_sparse"`` or ``"fully_sparse"``.
        dt: Seconds per step; ``None`` takes the dataset system's ``dt``.
        similarity_choice: Measure used at rollout ends in ``fully_sparse`` mode.
        delta_scale: Margin applied to the largest recorded position change
            when deriving delta bounds.
    """

    window_w: int = 20
    rollout_h: int = 50
    start_offset_max: int = 30
    reward_mode: str = "pseudo_sparse"
    dt: float | None = None
    similarity_choice: str = "simplified"
    delta_scale: float = 1.5

    def __post_init__(self):
        if self.window_w < 1:
            raise ConfigError(f"window_w must be >= 1, got {self.window_w}")
        if self.rollout_h < 1:
            raise ConfigError(f"rollout_h must be >= 1, got {self.rollout_h}")
        if self.start_offset_max < 0:
            raise ConfigError(f"start_offset_max must be >= 0, got {self.start_offset_max}")
        if self.reward_mode not in REWARD_MODES:
            raise ConfigError(f"reward_mode must be one of {REWARD_MODES}, got {self.reward_mode!r}")
        if self.similarity_choice not in SIMILARITIES:
            raise ConfigError(f"similarity_choice must be one of {sorted(SIMILARITIES)}, got {self.similarity_choice!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not self.delta_scale > 0:
            raise ConfigError(f"delta_scale must be > 0, got {self.delta_scale}")


# region State helpers


def split_state(state, spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Split a state into its ``(qpos, qvel)`` parts.

    Raises:
        ShapeError: If the state does not have ``spec.state_dim`` entries.
    """
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (spec.state_dim,):
        raise ShapeError(f"expected state of shape ({spec.state_dim},), got {state.shape}")
    return state[: spec.n_pos].copy(), state[spec.n_pos :].copy()


def join_state(qpos, qvel) -> np.ndarray:
    return np.concatenate([np.asarray(qpos, dtype=np.float64), np.asarray(qvel, dtype=np.float64)])


def integrate_delta(qpos, delta, dt: float, angle_mask=None) -> tuple[np.ndarray, np.ndarray]:
    """Apply a position increment.

    ``qpos' = qpos + delta`` (wrapped where *angle_mask* is set) and
    ``qvel' = delta / dt``.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    qpos = np.asarray(qpos, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    qpos_next = qpos + delta
    if angle_mask is not None and np.any(angle_mask):
        qpos_next = np.where(angle_mask, wrap_angle(qpos_next), qpos_next)
    return qpos_next, delta / dt


def position_deltas(episode: Episode, spec: SystemSpec) -> np.ndarray:
    """Recorded ``qpos_{t+1} - qpos_t`` for every transition, shape ``[L, n_pos]``.

    Angle dimensions are differenced on the circle.
    """
    qpos = episode.states[:, : spec.n_pos]
    deltas = qpos[1:] - qpos[:-1]
    if spec.angle_dims:
        dims = list(spec.angle_dims)
        deltas[:, dims] = wrap_angle(deltas[:, dims])
    return deltas


def delta_bounds(dataset: Dataset, scale: float = 1.5, floor: float = 1e-6) -> np.ndarray:
    """Symmetric per-dimension delta bound: ``scale`` times the largest recorded ``|delta qpos|``."""
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot derive delta bounds from an empty dataset")
    largest = np.max(np.vstack([np.abs(position_deltas(ep, dataset.system)) for ep in dataset.episodes]), axis=0)
    return np.maximum(largest * scale, floor)


def true_window(episode: Episode, t: int, window_w: int) -> np.ndarray:
    """Flattened stack of recorded frames ending at step *t*, oldest first.

    Indices before 0 repeat frame 0.
    """
    if not 0 <= t < episode.length:
        raise ShapeError(f"step {t} outside episode of length {episode.length}")
    idx = np.maximum(np.arange(t - window_w + 1, t + 1), 0)
    return np.concatenate([episode.states[idx], episode.actions[idx]], axis=1).reshape(-1)


# endregion


class StackedObservation:
    """FIFO window of ``(state, action)`` frames, newest last."""

    __slots__ = ("_frames", "window_w")

    def __init__(self, frames: list[np.ndarray]):
        if not frames:
            raise ShapeError("a stacked observation needs at least one frame")
        self.window_w = len(frames)
        self._frames: deque[np.ndarray] = deque((np.asarray(f, dtype=np.float64) for f in frames), maxlen=self.window_w)

    @classmethod
    def from_episode(cls, episode: Episode, t: int, window_w: int) -> StackedObservation:
        flat = true_window(episode, t, window_w)
        return cls(list(flat.reshape(window_w, -1)))

    def push(self, state: np.ndarray, action: np.ndarray) -> None:
        self._frames.append(np.concatenate([state, action]))

    def newest_state(self, state_dim: int) -> np.ndarray:
        return self._frames[-1][:state_dim].copy()

    def replace_newest_state(self, state: np.ndarray) -> None:
        frame = self._frames[-1].copy()
        frame[: len(state)] = state
        self._frames[-1] = frame

    def flat(self) -> np.ndarray:
        return np.concatenate(self._frames)

    def __len__(self) -> int:
        return len(self._frames)


@dataclass
class RolloutState:
    """Bookkeeping of one pass over a recorded episode."""

    episode_index: int
    start_index: int
    step_counter: int
    rollout_step_counter: int = 0
    segment_start: int = 0
    terminal: bool = False
    predicted_traj: list[np.ndarray] = field(default_factory=list)
    true_traj: list[np.ndarray] = field(default_factory=list)
    true_actions: list[np.ndarray] = field(default_factory=list)


def reward_fn(predicted, true, rollout_terminal: bool, config: FwdEnvConfig) -> float:
    """Reward of one step.

    Args:
        predicted: Predicted states of the current rollout segment, newest last.
        true: Recorded states of the same segment.
        rollout_terminal: Whether this step closes the segment.
        config: Environment settings (reward mode, similarity choice).
    """
    if rollout_terminal:
        if config.reward_mode == "pseudo_sparse":
            return similarity_reward("z_e", true, predicted)
        return similarity_reward(config.similarity_choice, true, predicted)
    if config.reward_mode == "fully_sparse":
        return 0.0
    return -float(np.linalg.norm(np.asarray(true[-1]) - np.asarray(predicted[-1])))


class ForwardModelEnv(gym.Env):
    """Gymnasium environment replaying a dataset for forward-model learning.

    Args:
        dataset: Recorded episodes, read-only.
        config: Environment settings.
        bounds: Symmetric delta bound per position dimension; derived from
            *dataset* with ``config.delta_scale`` when omitted.
    """

    metadata = {"render_modes": []}

    def __init__(self, dataset: Dataset, config: FwdEnvConfig | None = None, bounds: np.ndarray | None = None):
        super().__init__()
        if len(dataset) == 0:
            raise EmptyDatasetError("the forward-model environment needs at least one episode")
        self.dataset = dataset
        self.system = dataset.system
        self.config = config or FwdEnvConfig()
        self.dt = self.config.dt if self.config.dt is not None else self.system.dt
        self.bounds = np.asarray(bounds if bounds is not None else delta_bounds(dataset, self.config.delta_scale), dtype=np.float64)
        if self.bounds.shape != (self.system.n_pos,):
            raise ShapeError(f"delta bounds must have shape ({self.system.n_pos},), got {self.bounds.shape}")
        self._angle_mask = self.system.angle_mask()
        self._eligible = [
            i for i, ep in enumerate(dataset.episodes) if ep.length > self.config.start_offset_max + self.config.rollout_h
        ]

        obs_dim = self.config.window_w * self.system.frame_dim
        self.observation_space = gym.spaces.Box(-np.inf, np.inf, shape=(obs_dim,), dtype=np.float64)
        self.action_space = gym.spaces.Box(-self.bounds, self.bounds, dtype=np.float64)

        self.rollout: RolloutState | None = None
        self._stack: StackedObservation | None = None
        self._deltas: np.ndarray | None = None

    # ─────────────────────────────────────────────────
    # Properties
    # ─────────────────────────────────────────────────

    @property
    def episode(self) -> Episode:
        self._require_reset()
        return self.dataset.episodes[self.rollout.episode_index]

    @property
    def stack(self) -> StackedObservation:
        self._require_reset()
        return self._stack

    @property
    def segment(self) -> tuple[np.ndarray, np.ndarray]:
        """``(predicted, true)`` states of the rollout segment in progress."""
        self._require_reset()
        start = self.rollout.segment_start
        return np.asarray(self.rollout.predicted_traj[start:]), np.asarray(self.rollout.true_traj[start:])

    def true_delta(self) -> np.ndarray:
        """Recorded position increment of the next step."""
        self._require_reset()
        if self.rollout.terminal:
            raise ContractViolation("no recorded delta after the episode terminated")
        if self._deltas is None:
            self._deltas = position_deltas(self.episode, self.system)
        return self._deltas[self.rollout.step_counter].copy()

    def _require_reset(self) -> None:
        if self.rollout is None:
            raise ContractViolation("call reset() before using the environment")

    # ─────────────────────────────────────────────────
    # Gymnasium API
    # ─────────────────────────────────────────────────

    def reset(self, *, seed: int | None = None, options: Mapping[str, Any] | None = None):
        """Start a pass over a recorded episode.

        ``options`` may pin ``episode_index`` and ``start_index``; otherwise the
        episode is drawn uniformly from those longer than
        ``start_offset_max + rollout_h`` and the start uniformly from
        ``[0, start_offset_max]``.

        Raises:
            EmptyDatasetError: If no episode is long enough.
        """
        super().reset(seed=seed)
        options = dict(options or {})
        if "episode_index" in options:
            episode_index = int(options["episode_index"])
            if not 0 <= episode_index < len(self.dataset):
                raise ConfigError(f"episode_index {episode_index} out of range [0, {len(self.dataset)})")
        else:
            if not self._eligible:
                raise EmptyDatasetError(
                    f"no episode longer than start_offset_max + rollout_h = "
                    f"{self.config.start_offset_max + self.config.rollout_h}"
                )
            episode_index = self._eligible[int(self.np_random.integers(len(self._eligible)))]
        episode = self.dataset.episodes[episode_index]

        if "start_index" in options:
            start = int(options["start_index"])
            if not 0 <= start < episode.length:
                raise ConfigError(f"start_index {start} out of range for episode of length {episode.length}")
        else:
            start = int(self.np_random.integers(0, self.config.start_offset_max + 1))

        self.rollout = RolloutState(episode_index=episode_index, start_index=start, step_counter=start)
        self._stack = StackedObservation.from_episode(episode, start, self.config.window_w)
        self._deltas = None
        return self._stack.flat(), {"episode_index": episode_index, "start_index": start}

    def step(self, action):
        """Advance one step with the predicted position increment *action*.

        Returns:
            ``(observation, reward, terminated, truncated, info)``; ``info``
            carries ``rollout_terminal``, ``predicted_state`` and ``true_state``.

        Raises:
            EnvironmentFault: If *action* is non-finite or mis-shaped.
            ContractViolation: If the episode already terminated.
        """
        self._require_reset()
        ctx = self.rollout
        if ctx.terminal:
            raise ContractViolation("step() called after the episode terminated; call reset()")
        delta = np.asarray(action, dtype=np.float64).reshape(-1)
        if delta.shape != self.bounds.shape:
            raise EnvironmentFault(f"expected action of shape {self.bounds.shape}, got {delta.shape}")
        if not np.all(np.isfinite(delta)):
            raise EnvironmentFault(f"non-finite action {delta.tolist()} at step {ctx.step_counter}")
        delta = np.clip(delta, -self.bounds, self.bounds)

        spec = self.system
        episode = self.episode
        qpos, _ = split_state(self._stack.newest_state(spec.state_dim), spec)
        qpos_next, qvel_next = integrate_delta(qpos, delta, self.dt, self._angle_mask)
        predicted = join_state(qpos_next, qvel_next)

        ctx.step_counter += 1
        ctx.rollout_step_counter += 1
        true_state = episode.states[ctx.step_counter].copy()
        ctx.predicted_traj.append(predicted)
        ctx.true_traj.append(true_state)
        ctx.true_actions.append(episode.actions[ctx.step_counter - 1].copy())

        rollout_terminal = ctx.rollout_step_counter >= self.config.rollout_h
        predicted_seg, true_seg = self.segment
        reward = reward_fn(predicted_seg, true_seg, rollout_terminal, self.config)

        # the final state has no recorded action; the last one is repeated
        next_action = episode.actions[min(ctx.step_counter, episode.length - 1)]
        self._stack.push(predicted, next_action)
        if rollout_terminal:
            self._stack.replace_newest_state(true_state)
            ctx.rollout_step_counter = 0
            ctx.segment_start = len(ctx.predicted_traj)

        terminated = ctx.step_counter >= episode.length
        ctx.terminal = terminated
        info = {
            "rollout_terminal": rollout_terminal,
            "predicted_state": predicted,
            "true_state": true_state,
            "step": ctx.step_counter,
            "episode_index": ctx.episode_index,
        }
        return self._stack.flat(), float(reward), terminated, False, info
