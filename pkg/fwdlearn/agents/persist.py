"""Checkpoint loading for any trained agent kind."""

from __future__ import annotations

from pathlib import Path

from fwdlearn.agents.sac import SacAgent
from fwdlearn.agents.supervised import SupervisedAgent
from fwdlearn.core.exceptions import DataError
from fwdlearn.nn.checkpoint import Checkpoint
from fwdlearn.nn.checkpoint import load_checkpoint
from fwdlearn.nn.checkpoint import save_checkpoint

__all__ = ["AGENT_KINDS", "agent_from_checkpoint", "load_agent", "save_agent"]

AGENT_KINDS = {SacAgent.kind: SacAgent, SupervisedAgent.kind: SupervisedAgent}


def agent_from_checkpoint(checkpoint: Checkpoint) -> SacAgent | SupervisedAgent:
    try:
        cls = AGENT_KINDS[checkpoint.kind]
    except KeyError as exc:
        raise DataError(f"unknown checkpoint kind {checkpoint.kind!r}") from exc
    return cls.from_checkpoint(checkpoint)


def load_agent(path: str | Path) -> SacAgent | SupervisedAgent:
    return agent_from_checkpoint(load_checkpoint(path))


def save_agent(path: str | Path, agent: SacAgent | SupervisedAgent, config_echo: dict | None = None) -> Path:
    return save_checkpoint(path, agent.checkpoint(config_echo))
