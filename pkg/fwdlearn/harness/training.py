"""Fwdlearn Training Loops

Reinforcement-learning and supervised training of forward models, sharing
data preparation, evaluation, metrics and checkpointing.

RL loop, one round per environment episode:
    1. collect one episode with exploration
    2. push every transition into the replay buffer
    3. ``updates_per_episode`` SAC updates (skipped while the buffer is too small)
    4. evaluate on the hold-out pool at round 1, every ``eval_every`` rounds and at the end
    5. emit a metrics record; checkpoint every ``checkpoint_every`` rounds

The supervised loop replaces steps 1-3 with one ``sl_round``.

Output directory layout::

    run.json                  resolved configuration and recorded decisions
    metrics.csv               one row per round
    checkpoints/episode_000100.fwdc
    model.fwdc                final model
    summary.json              update accounting and final metrics

License: MIT
"""

from __future__ import annotations

import json
import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np
import torch

from fwdlearn.agents.buffer import ReplayBuffer
from fwdlearn.agents.persist import save_agent
from fwdlearn.agents.sac import SacAgent
from fwdlearn.agents.supervised import SupervisedAgent
from fwdlearn.agents.supervised import build_examples
from fwdlearn.config.manager import ConfigManager
from fwdlearn.config.manager import RunConfig
from fwdlearn.core.events import RunEventDispatcher
from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import TrainingFault
from fwdlearn.env.forward import ForwardModelEnv
from fwdlearn.env.forward import delta_bounds
from fwdlearn.harness.evaluation import Agent
from fwdlearn.harness.evaluation import evaluate_policy
from fwdlearn.harness.evaluation import supervised_mse
from fwdlearn.harness.records import CsvMetricsSink
from fwdlearn.harness.records import LoggingSink
from fwdlearn.harness.records import MetricsRecord
from fwdlearn.systems.base import Dataset
from fwdlearn.systems.base import Scaler
from fwdlearn.systems.dataset import filter_episodes
from fwdlearn.systems.dataset import generate_dataset
from fwdlearn.systems.dataset import minmax_stats
from fwdlearn.systems.dataset import split_holdout
from fwdlearn.systems.dynamics import make_system
from fwdlearn.systems.io import load_dataset
from fwdlearn.utils.seeding import derive_seed

__all__ = [
    "PreparedData",
    "CollectResult",
    "RunResult",
    "deterministic_torch",
    "prepare_data",
    "collect",
    "should_evaluate",
    "checkpoint_path",
    "train_rl",
    "train_sl",
]

logger = logging.getLogger(__name__)


@dataclass
class PreparedData:
    dataset: Dataset
    train: Dataset
    holdout: Dataset
    scaler: Scaler
    bounds: np.ndarray


@dataclass
class CollectResult:
    transitions: list[tuple[np.ndarray, np.ndarray, float, np.ndarray, bool]] = field(default_factory=list)
    total_reward: float = 0.0
    rollout_ends: int = 0
    terminated: bool = False

    @property
    def steps(self) -> int:
        return len(self.transitions)


@dataclass
class RunResult:
    out_dir: Path
    model_path: Path
    metrics_path: Path
    records: list[MetricsRecord]
    summary: dict


@contextmanager
def deterministic_torch(deterministic: bool) -> Iterator[None]:
    """Single-threaded torch with deterministic kernels while the block runs.

    Both settings are process-wide; the previous values come back on exit.
    """
    if not deterministic:
        yield
        return
    threads = torch.get_num_threads()
    enabled = torch.are_deterministic_algorithms_enabled()
    warn_only = torch.is_deterministic_algorithms_warn_only_enabled()
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)
    try:
        yield
    finally:
        torch.set_num_threads(threads)
        torch.use_deterministic_algorithms(enabled, warn_only=warn_only)


def prepare_data(config: RunConfig) -> PreparedData:
    """Load or generate the dataset, filter it and split off the hold-out pool.

    Raises:
        ConfigError: If the configured dataset file does not exist or belongs to another system.
    """
    if config.dataset is not None:
        if not config.dataset.is_file():
            raise ConfigError(f"dataset file not found: {config.dataset}")
        dataset = load_dataset(config.dataset)
        if dataset.system.name != config.system:
            raise ConfigError(f"dataset holds system {dataset.system.name!r}, config asks for {config.system!r}")
    else:
        data = config.data
        dataset = generate_dataset(
            make_system(config.system),
            data.behaviors,
            data.episodes,
            data.max_len,
            derive_seed(config.seed, "dataset"),
            min_len=data.min_len,
            workers=data.workers,
        )
    dataset = filter_episodes(dataset, config.data.filter_min_len)
    train, holdout = split_holdout(dataset, config.data.holdout_fraction)
    bounds = delta_bounds(dataset, config.env.delta_scale)
    return PreparedData(dataset, train, holdout, minmax_stats(dataset), bounds)


def collect(env: ForwardModelEnv, agent: Agent, explore: bool, max_steps: int, seed: int | None = None) -> CollectResult:
    """Run one environment episode, capped at *max_steps* steps.

    Returns the transitions in order with their rewards and terminal flags.
    """
    result = CollectResult()
    obs, _ = env.reset(seed=seed)
    for _ in range(max_steps):
        action = agent.act(obs, explore=explore)
        next_obs, reward, terminated, _, info = env.step(action)
        result.transitions.append((obs, np.asarray(action, dtype=np.float64), reward, next_obs, terminated))
        result.total_reward += reward
        result.rollout_ends += int(info["rollout_terminal"])
        obs = next_obs
        if terminated:
            result.terminated = True
            break
    return result


def should_evaluate(round_index: int, total: int, every: int) -> bool:
    return round_index == 1 or round_index == total or round_index % every == 0


def checkpoint_path(out_dir: Path, round_index: int) -> Path:
    return out_dir / "checkpoints" / f"episode_{round_index:06d}.fwdc"


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


class _Run:
    """Shared plumbing of a training run: output files, sinks, checkpoints."""

    def __init__(self, config: RunConfig, label: str, manager: ConfigManager | None):
        self.config = config
        self.label = label
        self.out_dir = Path(config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        manager = manager or _manager_for(config)
        self.config_echo = config.to_dict()
        manager.save_config(self.out_dir / "run.json", extra={"run": label, **manager.recorded_decisions()})

        self.metrics_path = self.out_dir / "metrics.csv"
        self.dispatcher = RunEventDispatcher()
        self.dispatcher.register(CsvMetricsSink(self.metrics_path))
        self.dispatcher.register(LoggingSink(label))
        self.checkpoints: list[str] = []

    def clock(self) -> float:
        return time.perf_counter()

    def wall_ms(self, started: float) -> float | None:
        if self.config.deterministic:
            return None
        return (time.perf_counter() - started) * 1000.0

    def checkpoint(self, agent, round_index: int) -> None:
        if round_index % self.config.checkpoint_every == 0:
            path = save_agent(checkpoint_path(self.out_dir, round_index), agent, self.config_echo)
            self.checkpoints.append(str(path.relative_to(self.out_dir)))
            logger.info("run=%s checkpoint=%s", self.label, path)

    def finish(self, agent, summary: dict, status: str) -> RunResult:
        model_path = self.out_dir / "model.fwdc"
        if status == "completed":
            save_agent(model_path, agent, self.config_echo)
        self.dispatcher.close()
        records = self.dispatcher.history
        final = records[-1] if records else None
        summary = {
            "run": self.label,
            "status": status,
            "rounds": len(records),
            "checkpoints": self.checkpoints,
            "final": None if final is None else asdict(final),
            **summary,
        }
        (self.out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return RunResult(self.out_dir, model_path, self.metrics_path, records, summary)


def _manager_for(config: RunConfig) -> ConfigManager:
    manager = ConfigManager()
    manager.update_config(config.to_dict())
    return manager


def train_rl(config: RunConfig, manager: ConfigManager | None = None) -> RunResult:
    """Train a SAC forward model for ``config.episodes`` rounds.

    Raises:
        TrainingFault: If a loss becomes non-finite; checkpoints already
            written are kept and ``summary.json`` records the abort.
    """
    with deterministic_torch(config.deterministic):
        return _train_rl(config, manager)


def _train_rl(config: RunConfig, manager: ConfigManager | None) -> RunResult:
    run = _Run(config, "rl", manager)
    data = prepare_data(config)
    agent = SacAgent(
        data.dataset.system, config.env.window_w, data.scaler, data.bounds, config.sac, config.hidden, seed=config.seed
    )
    env = ForwardModelEnv(data.train, config.env, bounds=data.bounds)
    buffer = ReplayBuffer(config.sac.buffer_capacity, agent.actor.obs_dim, agent.actor.action_dim)
    holdout_examples = build_examples(data.holdout, config.env.window_w)
    performed = skipped = 0
    logger.info(
        "run=rl system=%s episodes=%d train=%d holdout=%d", config.system, config.episodes, len(data.train), len(data.holdout)
    )

    try:
        for round_index in range(1, config.episodes + 1):
            started = run.clock()
            result = collect(
                env, agent, explore=True, max_steps=config.collect_max_steps, seed=derive_seed(config.seed, "collect", round_index)
            )
            buffer.extend(result.transitions)

            critic, actor, alpha = [], [], []
            for _ in range(config.sac.updates_per_episode):
                update = agent.update(buffer)
                if update.skipped:
                    skipped += 1
                    continue
                performed += 1
                critic.append(update.critic_loss)
                actor.append(update.actor_loss)
                alpha.append(update.alpha)

            rmse = reward = mse = None
            if should_evaluate(round_index, config.episodes, config.eval_every):
                rmse, reward = evaluate_policy(
                    agent, data.holdout, config.env, data.bounds, config.eval.n_episodes, config.seed
                )
                mse = supervised_mse(agent.actor, holdout_examples)

            run.dispatcher.process(
                MetricsRecord(
                    round=round_index,
                    critic_loss=_mean(critic),
                    actor_loss=_mean(actor),
                    alpha=_mean(alpha),
                    supervised_mse=mse,
                    rmse_rollout=rmse,
                    mean_rollout_reward=reward,
                    total_env_reward=result.total_reward,
                    wall_ms=run.wall_ms(started),
                )
            )
            run.checkpoint(agent, round_index)
    except TrainingFault:
        logger.exception("run=rl aborted, last checkpoint kept")
        run.finish(agent, {"total_updates": performed, "skipped_updates": skipped}, status="aborted")
        raise

    return run.finish(agent, {"total_updates": performed, "skipped_updates": skipped}, status="completed")


def train_sl(config: RunConfig, manager: ConfigManager | None = None) -> RunResult:
    """Train the supervised baseline for ``config.episodes`` rounds.

    Rollout metrics are evaluated exactly as for :func:`train_rl`; critic,
    actor, alpha and environment-reward columns stay empty.
    """
    with deterministic_torch(config.deterministic):
        return _train_sl(config, manager)


def _train_sl(config: RunConfig, manager: ConfigManager | None) -> RunResult:
    run = _Run(config, "sl", manager)
    data = prepare_data(config)
    agent = SupervisedAgent(
        data.dataset.system, config.env.window_w, data.scaler, data.bounds, config.sl, config.hidden, seed=config.seed
    )
    examples = build_examples(data.train, config.env.window_w)
    logger.info("run=sl system=%s rounds=%d examples=%d", config.system, config.episodes, len(examples))

    try:
        for round_index in range(1, config.episodes + 1):
            started = run.clock()
            mse = agent.sl_round(examples)
            rmse = reward = None
            if should_evaluate(round_index, config.episodes, config.eval_every):
                rmse, reward = evaluate_policy(
                    agent, data.holdout, config.env, data.bounds, config.eval.n_episodes, config.seed
                )
            run.dispatcher.process(
                MetricsRecord(
                    round=round_index,
                    supervised_mse=mse,
                    rmse_rollout=rmse,
                    mean_rollout_reward=reward,
                    wall_ms=run.wall_ms(started),
                )
            )
            run.checkpoint(agent, round_index)
    except TrainingFault:
        logger.exception("run=sl aborted, last checkpoint kept")
        run.finish(agent, {"total_updates": agent.updates, "skipped_updates": 0}, status="aborted")
        raise

    return run.finish(agent, {"total_updates": agent.updates, "skipped_updates": 0}, status="completed")
