"""Fwdlearn Metrics"""

from fwdlearn.metrics.similarity import SIMILARITIES
from fwdlearn.metrics.similarity import rmse_rollout_metric
from fwdlearn.metrics.similarity import rollout_loss
from fwdlearn.metrics.similarity import simplified_similarity
from fwdlearn.metrics.similarity import similarity_reward
from fwdlearn.metrics.similarity import z_e

__all__ = (
    "SIMILARITIES",
    "rollout_loss",
    "z_e",
    "simplified_similarity",
    "rmse_rollout_metric",
    "similarity_reward",
)
