"""Fwdlearn Agents

Forward-model learners: the soft actor-critic agent, the supervised
baseline, the replay buffer they draw from and a scripted oracle.
"""

from fwdlearn.agents.buffer import ReplayBuffer
from fwdlearn.agents.oracle import TrueDeltaAgent
from fwdlearn.agents.persist import load_agent
from fwdlearn.agents.persist import save_agent
from fwdlearn.agents.policy import ForwardPolicy
from fwdlearn.agents.sac import SacAgent
from fwdlearn.agents.sac import SacConfig
from fwdlearn.agents.supervised import SlConfig
from fwdlearn.agents.supervised import SupervisedAgent

__all__ = (
    "ReplayBuffer",
    "TrueDeltaAgent",
    "ForwardPolicy",
    "SacAgent",
    "SacConfig",
    "SlConfig",
    "SupervisedAgent",
    "load_agent",
    "save_agent",
)
