"""Scripted agent that replays the recorded position deltas.

It reads the next recorded delta straight from the environment, so its
rollouts reproduce the dataset up to floating-point rounding.
"""

from __future__ import annotations

import numpy as np

from fwdlearn.env.forward import ForwardModelEnv

__all__ = ["TrueDeltaAgent"]


class TrueDeltaAgent:
    kind = "oracle"

    def __init__(self, env: ForwardModelEnv):
        self.env = env

    def act(self, obs: np.ndarray, explore: bool = False) -> np.ndarray:
        return self.env.true_delta()
