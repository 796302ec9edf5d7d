"""Fwdlearn Networks

Function approximators, gradient helpers and the checkpoint format.
"""

from fwdlearn.nn.checkpoint import Checkpoint
from fwdlearn.nn.checkpoint import load_checkpoint
from fwdlearn.nn.checkpoint import save_checkpoint
from fwdlearn.nn.heads import GaussianHeadOutput
from fwdlearn.nn.heads import quantile_huber_loss
from fwdlearn.nn.heads import squashed_gaussian_sample
from fwdlearn.nn.mlp import Mlp
from fwdlearn.nn.mlp import MlpSpec
from fwdlearn.nn.mlp import mish
from fwdlearn.nn.optim import adam_step
from fwdlearn.nn.optim import grad
from fwdlearn.nn.optim import value_and_grad

__all__ = (
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "GaussianHeadOutput",
    "quantile_huber_loss",
    "squashed_gaussian_sample",
    "Mlp",
    "MlpSpec",
    "mish",
    "adam_step",
    "grad",
    "value_and_grad",
)
