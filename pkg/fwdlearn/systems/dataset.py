"""Fwdlearn Dataset Generation

Builds trajectory datasets from the built-in systems and derives the
statistics the rest of the library needs from them.

Features:
    - Seeded generation: every episode draws from its own stream spawned from
      one ``SeedSequence``, so the result does not depend on scheduling.
    - Optional thread pool for episode generation.
    - Length filtering, min-max statistics, hold-out split.

Example:
    spec = make_system("msd")
    data = generate_dataset(spec, ["random", "sinusoid"], n_episodes=4, max_len=100, seed=1)
    scaler = minmax_stats(data)

License: MIT
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import EmptyDatasetError
from fwdlearn.systems.base import Dataset
from fwdlearn.systems.base import Episode
from fwdlearn.systems.base import Scaler
from fwdlearn.systems.base import SystemSpec
from fwdlearn.systems.behavior import BEHAVIORS
from fwdlearn.systems.behavior import make_behavior
from fwdlearn.systems.dynamics import step_system
from fwdlearn.systems.dynamics import wrap_angle

__all__ = ["generate_dataset", "generate_episode", "filter_episodes", "minmax_stats", "split_holdout"]

logger = logging.getLogger(__name__)


def generate_episode(
    spec: SystemSpec,
    behavior: str,
    length: int,
    rng: np.random.Generator,
) -> Episode:
    """Simulate one episode of *length* transitions under *behavior*."""
    low = np.asarray(spec.action_low)
    high = np.asarray(spec.action_high)
    policy = make_behavior(behavior, spec, rng, length)

    state = rng.uniform(np.asarray(spec.init_low), np.asarray(spec.init_high))
    if spec.angle_dims:
        dims = list(spec.angle_dims)
        state[dims] = wrap_angle(state[dims])

    states = np.empty((length + 1, spec.state_dim))
    actions = np.empty((length, spec.action_dim))
    states[0] = state
    for t in range(length):
        action = np.clip(policy(t, states[t]), low, high)
        actions[t] = action
        states[t + 1] = step_system(states[t], action, spec)
    return Episode(states, actions)


def generate_dataset(
    spec: SystemSpec,
    behavior_mix: Sequence[str],
    n_episodes: int,
    max_len: int,
    seed: int,
    min_len: int | None = None,
    workers: int = 1,
) -> Dataset:
    """Generate a dataset of *n_episodes* episodes.

    Episode ``i`` uses ``behavior_mix[i % len(behavior_mix)]``, so the mix is
    uniform by episode count. Without *min_len* every episode has *max_len*
    transitions; with it, lengths are uniform in ``[min_len, max_len]``.

    Args:
        spec: System to simulate.
        behavior_mix: Behavior policy names.
        n_episodes: Number of episodes (>= 1).
        max_len: Maximum episode length in transitions (>= 2).
        seed: Root seed.
        min_len: Optional minimum episode length.
        workers: Threads used to simulate episodes.

    Returns:
        The generated dataset; provenance records each episode's policy.

    Raises:
        ConfigError: On an unknown policy name or invalid counts.
    """
    if n_episodes < 1:
        raise ConfigError(f"n_episodes must be >= 1, got {n_episodes}")
    if max_len < 2:
        raise ConfigError(f"max_len must be >= 2, got {max_len}")
    if min_len is not None and not 1 <= min_len <= max_len:
        raise ConfigError(f"min_len must lie in [1, max_len], got {min_len}")
    mix = list(behavior_mix)
    if not mix:
        raise ConfigError("behavior_mix must name at least one policy")
    unknown = [name for name in mix if name not in BEHAVIORS]
    if unknown:
        raise ConfigError(f"unknown behavior policies {unknown}; choose from {sorted(BEHAVIORS)}")

    children = np.random.SeedSequence(seed).spawn(n_episodes)

    def build(index: int) -> Episode:
        rng = np.random.default_rng(children[index])
        length = max_len if min_len is None else int(rng.integers(min_len, max_len + 1))
        return generate_episode(spec, mix[index % len(mix)], length, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            episodes = list(pool.map(build, range(n_episodes)))
    else:
        episodes = [build(i) for i in range(n_episodes)]

    provenance = tuple(mix[i % len(mix)] for i in range(n_episodes))
    logger.info("generated system=%s episodes=%d max_len=%d seed=%d", spec.name, n_episodes, max_len, seed)
    return Dataset(spec, tuple(episodes), provenance)


def filter_episodes(dataset: Dataset, min_len: int) -> Dataset:
    """Keep the episodes with at least *min_len* transitions, in order.

    Raises:
        ConfigError: If ``min_len < 1``.
        EmptyDatasetError: If no episode survives.
    """
    if min_len < 1:
        raise ConfigError(f"min_len must be >= 1, got {min_len}")
    keep = [i for i, episode in enumerate(dataset.episodes) if episode.length >= min_len]
    if not keep:
        raise EmptyDatasetError(f"no episode has length >= {min_len} (longest is {max(dataset.lengths, default=0)})")
    if len(keep) != len(dataset):
        logger.info("filtered kept=%d dropped=%d min_len=%d", len(keep), len(dataset) - len(keep), min_len)
    return dataset.subset(keep)


def minmax_stats(dataset: Dataset) -> Scaler:
    """Per-dimension min and max over every ``(state, action)`` frame.

    The returned scaler covers ``state_dim + action_dim`` entries, states first.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot compute statistics of an empty dataset")
    states = np.concatenate([episode.states for episode in dataset.episodes])
    actions = np.concatenate([episode.actions for episode in dataset.episodes])
    lo = np.concatenate([states.min(axis=0), actions.min(axis=0)])
    hi = np.concatenate([states.max(axis=0), actions.max(axis=0)])
    return Scaler(lo, hi)


def split_holdout(dataset: Dataset, fraction: float = 0.1) -> tuple[Dataset, Dataset]:
    """Split off the last ``fraction`` of episodes as an evaluation pool.

    With two or more episodes at least one is held out and at least one kept
    for training. A single-episode dataset is used for both.
    """
    if not 0.0 <= fraction < 1.0:
        raise ConfigError(f"holdout fraction must lie in [0, 1), got {fraction}")
    n = len(dataset)
    if n == 0:
        raise EmptyDatasetError("cannot split an empty dataset")
    if n == 1 or fraction == 0.0:
        return dataset, dataset
    n_hold = min(max(1, round(n * fraction)), n - 1)
    return dataset.subset(range(n - n_hold)), dataset.subset(range(n - n_hold, n))
