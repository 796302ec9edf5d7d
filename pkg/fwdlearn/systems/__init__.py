"""Fwdlearn Systems

Reference dynamical systems and the trajectory datasets recorded from them.
"""

from fwdlearn.systems.base import Dataset
from fwdlearn.systems.base import Episode
from fwdlearn.systems.base import Scaler
from fwdlearn.systems.base import SystemSpec
from fwdlearn.systems.base import Transition
from fwdlearn.systems.dataset import filter_episodes
from fwdlearn.systems.dataset import generate_dataset
from fwdlearn.systems.dataset import minmax_stats
from fwdlearn.systems.dataset import split_holdout
from fwdlearn.systems.dynamics import SYSTEMS
from fwdlearn.systems.dynamics import make_system
from fwdlearn.systems.dynamics import step_msd
from fwdlearn.systems.dynamics import step_pendulum
from fwdlearn.systems.dynamics import step_system
from fwdlearn.systems.io import load_dataset
from fwdlearn.systems.io import save_dataset

__all__ = (
    "Dataset",
    "Episode",
    "Scaler",
    "SystemSpec",
    "Transition",
    "SYSTEMS",
    "make_system",
    "step_system",
    "step_pendulum",
    "step_msd",
    "generate_dataset",
    "filter_episodes",
    "minmax_stats",
    "split_holdout",
    "load_dataset",
    "save_dataset",
)
