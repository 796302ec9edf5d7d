"""
Fwdlearn (Forward Models Learned With Reinforcement Learning)

Fwdlearn learns forward models of small dynamical systems: one-step
predictors that are rolled out on their own predictions for hundreds of
steps. System identification is recast as a reinforcement-learning problem
in which the agent's action is the predicted position change and the reward
measures how far its bootstrapped rollout drifts from the recorded one.

Available components:
    - SystemSpec, Episode, Dataset      recorded trajectories (``.fwdt`` / ``.fwdb``)
    - ForwardModelEnv                   gymnasium environment over a dataset
    - SacAgent                          soft actor-critic with quantile critics
    - SupervisedAgent                   one-step regression baseline
    - TrueDeltaAgent                    scripted oracle replaying the data
    - ConfigManager, RunConfig          layered run configuration
    - train_rl, train_sl, eval_rollouts, render_report, run_comparison

Example:
    ```python
    from fwdlearn import ConfigManager, train_rl, train_sl

    manager = ConfigManager("pendulum")
    manager.set_value("episodes", "50")
    manager.set_value("out_dir", "runs/rl")
    result = train_rl(manager.build(), manager)
    print(result.summary["final"])
    ```

The same runs are available from the command line::

    fwdlearn gen --system pendulum --episodes 48 --max-len 1100 --seed 0 --out data.fwdb
    fwdlearn train-rl --config pendulum --set dataset=data.fwdb --out runs/rl
    fwdlearn eval-rollout --checkpoint runs/rl/model.fwdc --config pendulum --out runs/rl/eval

License: MIT
"""

from fwdlearn.utils.version import vernum

__version__ = str(vernum)

# Agents
from fwdlearn.agents import ForwardPolicy
from fwdlearn.agents import ReplayBuffer
from fwdlearn.agents import SacAgent
from fwdlearn.agents import SacConfig
from fwdlearn.agents import SlConfig
from fwdlearn.agents import SupervisedAgent
from fwdlearn.agents import TrueDeltaAgent
from fwdlearn.agents import load_agent
from fwdlearn.agents import save_agent

# Configuration
from fwdlearn.config import ConfigManager
from fwdlearn.config import RunConfig

# Core
from fwdlearn.core.events import RunEventDispatcher
from fwdlearn.core.exceptions import FwdlearnError

# Environment
from fwdlearn.env import ForwardModelEnv
from fwdlearn.env import FwdEnvConfig

# Harness
from fwdlearn.harness import eval_rollouts
from fwdlearn.harness import render_report
from fwdlearn.harness import run_comparison
from fwdlearn.harness import train_rl
from fwdlearn.harness import train_sl

# Systems
from fwdlearn.systems import Dataset
from fwdlearn.systems import Episode
from fwdlearn.systems import SystemSpec
from fwdlearn.systems.dataset import generate_dataset
from fwdlearn.systems.dynamics import make_system
from fwdlearn.systems.io import load_dataset
from fwdlearn.systems.io import save_dataset

__all__ = (
    "__version__",
    "ConfigManager",
    "Dataset",
    "Episode",
    "ForwardModelEnv",
    "ForwardPolicy",
    "FwdEnvConfig",
    "FwdlearnError",
    "ReplayBuffer",
    "RunConfig",
    "RunEventDispatcher",
    "SacAgent",
    "SacConfig",
    "SlConfig",
    "SupervisedAgent",
    "SystemSpec",
    "TrueDeltaAgent",
    "eval_rollouts",
    "generate_dataset",
    "load_agent",
    "load_dataset",
    "make_system",
    "render_report",
    "run_comparison",
    "save_agent",
    "save_dataset",
    "train_rl",
    "train_sl",
)
