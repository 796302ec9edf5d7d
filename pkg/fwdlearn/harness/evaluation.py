"""Fwdlearn Rollout Evaluation

Bootstrapped rollouts of a trained forward model over recorded episodes and
the rollout-size sweep built on them.

A rollout pass starts at step 0 of an episode, feeds the model its own
predictions, re-grounds on the recorded state every ``h`` steps and runs to
the end of the episode. The sweep repeats this for several ``h``; an ``h``
for which no episode is long enough is reported as absent.

License: MIT
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from collections.abc import Callable
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol
from typing import Union

import numpy as np
import torch

from fwdlearn.agents.policy import ForwardPolicy
from fwdlearn.agents.supervised import SlExamples
from fwdlearn.core.exceptions import ReportError
from fwdlearn.env.forward import ForwardModelEnv
from fwdlearn.env.forward import FwdEnvConfig
from fwdlearn.harness.records import format_cell
from fwdlearn.metrics.similarity import rmse_rollout_metric
from fwdlearn.nn.mlp import DTYPE
from fwdlearn.systems.base import Dataset
from fwdlearn.utils.seeding import numpy_rng

__all__ = [
    "Agent",
    "RolloutTrace",
    "RolloutRow",
    "ROLLOUT_HEADER",
    "bind_agent",
    "rollout_episode",
    "eval_pool",
    "evaluate_policy",
    "supervised_mse",
    "eval_rollouts",
    "write_rollout_csv",
    "read_rollout_csv",
    "write_trace_csv",
    "read_trace_csv",
]

logger = logging.getLogger(__name__)

ROLLOUT_HEADER = ["h", "mean_rmse", "std_rmse", "mean_reward", "n_episodes"]


class Agent(Protocol):
    def act(self, obs: np.ndarray, explore: bool = False) -> np.ndarray: ...


AgentLike = Union[Agent, Callable[[ForwardModelEnv], Agent]]


def bind_agent(agent: AgentLike, env: ForwardModelEnv) -> Agent:
    """Return *agent*, or build one for *env* when given a factory such as ``TrueDeltaAgent``."""
    if isinstance(agent, type) or not hasattr(agent, "act"):
        return agent(env)
    return agent


@dataclass
class RolloutTrace:
    """Recorded and predicted states of one rollout pass."""

    episode_index: int
    h: int
    true: np.ndarray
    predicted: np.ndarray
    boundaries: list[int]
    rewards: list[float]

    @property
    def rmse(self) -> float:
        return rmse_rollout_metric(self.true, self.predicted)

    @property
    def mean_rollout_reward(self) -> float:
        """Total reward divided by the number of (possibly partial) rollout segments."""
        segments = max(1, -(-len(self.rewards) // self.h))
        return float(np.sum(self.rewards)) / segments


@dataclass(frozen=True)
class RolloutRow:
    h: int
    mean_rmse: float | None
    std_rmse: float | None
    mean_reward: float | None
    n_episodes: int

    @property
    def absent(self) -> bool:
        return self.n_episodes == 0


def rollout_episode(
    agent: AgentLike,
    dataset: Dataset,
    env_config: FwdEnvConfig,
    bounds: np.ndarray,
    episode_index: int,
    h: int,
) -> RolloutTrace:
    """Greedy bootstrapped rollout over a whole episode, re-grounding every *h* steps."""
    config = dataclasses.replace(env_config, rollout_h=h, start_offset_max=0)
    env = ForwardModelEnv(dataset, config, bounds=bounds)
    actor = bind_agent(agent, env)
    obs, _ = env.reset(options={"episode_index": episode_index, "start_index": 0})
    true, predicted, boundaries, rewards = [], [], [], []
    terminated = False
    while not terminated:
        obs, reward, terminated, _, info = env.step(actor.act(obs, explore=False))
        true.append(info["true_state"])
        predicted.append(info["predicted_state"])
        rewards.append(reward)
        if info["rollout_terminal"]:
            boundaries.append(info["step"])
    return RolloutTrace(episode_index, h, np.asarray(true), np.asarray(predicted), boundaries, rewards)


def eval_pool(dataset: Dataset, n_episodes: int, seed: int, min_length: int = 1) -> list[int]:
    """Fixed, seeded choice of up to *n_episodes* episodes longer than *min_length*."""
    order = numpy_rng(seed, "eval-pool").permutation(len(dataset))
    eligible = [int(i) for i in order if dataset.episodes[i].length > min_length]
    return eligible[:n_episodes]


def evaluate_policy(
    agent: AgentLike,
    dataset: Dataset,
    env_config: FwdEnvConfig,
    bounds: np.ndarray,
    n_episodes: int,
    seed: int,
) -> tuple[float | None, float | None]:
    """Mean rollout RMSE and mean rollout reward at the training horizon.

    Returns ``(None, None)`` when no episode is longer than ``rollout_h``.
    """
    pool = eval_pool(dataset, n_episodes, seed, env_config.rollout_h)
    if not pool:
        return None, None
    traces = [rollout_episode(agent, dataset, env_config, bounds, i, env_config.rollout_h) for i in pool]
    return float(np.mean([t.rmse for t in traces])), float(np.mean([t.mean_rollout_reward for t in traces]))


@torch.no_grad()
def supervised_mse(policy: ForwardPolicy, examples: SlExamples) -> float:
    """One-step MSE of a forward policy in bound units."""
    x = torch.as_tensor(examples.inputs, dtype=DTYPE)
    y = torch.as_tensor(examples.targets, dtype=DTYPE)
    return float(policy.mse(x, y))


def eval_rollouts(
    agent: AgentLike,
    dataset: Dataset,
    env_config: FwdEnvConfig,
    bounds: np.ndarray,
    lengths: Sequence[int],
    n_episodes: int,
    seed: int,
    keep_traces: bool = False,
) -> tuple[list[RolloutRow], dict[int, list[RolloutTrace]]]:
    """Rollout-size sweep.

    For each ``h`` in *lengths* (in the given order) the same seeded episode
    pool, restricted to episodes longer than ``h``, is rolled out greedily.

    Returns:
        One row per ``h`` and, when *keep_traces* is set, the traces by ``h``.
    """
    rows: list[RolloutRow] = []
    kept: dict[int, list[RolloutTrace]] = {}
    for h in lengths:
        pool = eval_pool(dataset, n_episodes, seed, h)
        if not pool:
            logger.warning("rollout h=%d absent: no episode longer than h", h)
            rows.append(RolloutRow(int(h), None, None, None, 0))
            continue
        traces = [rollout_episode(agent, dataset, env_config, bounds, i, int(h)) for i in pool]
        rmses = np.array([t.rmse for t in traces])
        rewards = np.array([t.mean_rollout_reward for t in traces])
        rows.append(RolloutRow(int(h), float(rmses.mean()), float(rmses.std()), float(rewards.mean()), len(pool)))
        logger.info("rollout h=%d episodes=%d rmse=%.6g reward=%.6g", h, len(pool), rmses.mean(), rewards.mean())
        if keep_traces:
            kept[int(h)] = traces
    return rows, kept


# region Tables


def write_rollout_csv(rows: Sequence[RolloutRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ROLLOUT_HEADER)
        for row in rows:
            writer.writerow([row.h, format_cell(row.mean_rmse), format_cell(row.std_rmse), format_cell(row.mean_reward), row.n_episodes])
    return path


def read_rollout_csv(path: str | Path) -> list[RolloutRow]:
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot read rollout table {path}: {exc}") from exc
    rows = []
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            return []
        missing = [name for name in ROLLOUT_HEADER if name not in reader.fieldnames]
        if missing:
            raise ReportError(f"{path}: header is missing columns {missing}")
        for lineno, raw in enumerate(reader, start=2):
            try:
                rows.append(
                    RolloutRow(
                        int(raw["h"]),
                        *(None if not (raw[k] or "").strip() else float(raw[k]) for k in ROLLOUT_HEADER[1:4]),
                        int(raw["n_episodes"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ReportError(f"{path}: row {lineno} is malformed: {exc}") from exc
    return rows


def write_trace_csv(trace: RolloutTrace, path: str | Path) -> Path:
    """Per-step trace ``step,boundary,true_*,pred_*``; steps count from 1."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dims = trace.true.shape[1]
    boundary = set(trace.boundaries)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "boundary", *(f"true_{d}" for d in range(dims)), *(f"pred_{d}" for d in range(dims))])
        for t in range(len(trace.true)):
            step = t + 1
            writer.writerow(
                [step, int(step in boundary), *(repr(float(v)) for v in trace.true[t]), *(repr(float(v)) for v in trace.predicted[t])]
            )
    return path


def read_trace_csv(path: str | Path, h: int = 0, episode_index: int = -1) -> RolloutTrace:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot read trace {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if not header or header[:2] != ["step", "boundary"]:
        raise ReportError(f"{path}: not a rollout trace")
    dims = (len(header) - 2) // 2
    true, predicted, boundaries = [], [], []
    for lineno, row in enumerate(reader, start=2):
        try:
            values = [float(v) for v in row[2:]]
            if len(values) != 2 * dims:
                raise ValueError(f"expected {2 * dims} values, got {len(values)}")
            if int(row[1]):
                boundaries.append(int(row[0]))
        except (IndexError, ValueError) as exc:
            raise ReportError(f"{path}: row {lineno} is malformed: {exc}") from exc
        true.append(values[:dims])
        predicted.append(values[dims:])
    shape = (-1, dims)
    return RolloutTrace(
        episode_index, h, np.asarray(true, dtype=np.float64).reshape(shape), np.asarray(predicted, dtype=np.float64).reshape(shape), boundaries, []
    )


# endregion
