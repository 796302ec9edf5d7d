import logging
import os

import numpy as np
import pytest

os.environ.setdefault("SDL_VIDEODRIVER", "dummy")
os.environ.setdefault("SDL_AUDIODRIVER", "dummy")
os.environ.setdefault("PYGAME_HIDE_SUPPORT_PROMPT", "1")

from fwdlearn.config.manager import ConfigManager  # noqa: E402
from fwdlearn.env.forward import FwdEnvConfig  # noqa: E402
from fwdlearn.env.forward import delta_bounds  # noqa: E402
from fwdlearn.systems.dataset import generate_dataset  # noqa: E402
from fwdlearn.systems.dataset import minmax_stats  # noqa: E402
from fwdlearn.systems.dynamics import make_system  # noqa: E402


def pytest_report_header(config):
    if config.get_verbosity() > 0:
        return ["slow training runs need --runslow", "numeric precision: float64 throughout"]
    else:
        return "project deps: numpy, torch, scipy, gymnasium, matplotlib, pygame, pillow"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: mark test as slow to run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def pendulum():
    return make_system("pendulum")


@pytest.fixture(scope="session")
def msd():
    return make_system("msd")


@pytest.fixture(scope="session")
def pendulum_data(pendulum):
    """Six pendulum episodes of 120 transitions, every behavior policy twice."""
    return generate_dataset(pendulum, ["random", "sinusoid", "bang_bang"], 6, 120, seed=7)


@pytest.fixture(scope="session")
def msd_data(msd):
    return generate_dataset(msd, ["sinusoid", "random"], 4, 120, seed=3)


@pytest.fixture
def small_env_config():
    return FwdEnvConfig(window_w=4, rollout_h=10, start_offset_max=5)


@pytest.fixture(scope="session")
def pendulum_scaler(pendulum_data):
    return minmax_stats(pendulum_data)


@pytest.fixture(scope="session")
def pendulum_bounds(pendulum_data):
    return delta_bounds(pendulum_data)


@pytest.fixture
def tiny_manager(tmp_path):
    """Configuration of a run that finishes in seconds."""
    manager = ConfigManager()
    manager.update_config(
        {
            "episodes": 3,
            "eval_every": 2,
            "checkpoint_every": 2,
            "out_dir": str(tmp_path / "run"),
            "collect_max_steps": 60,
            "data": {"episodes": 6, "max_len": 120, "filter_min_len": 50, "holdout_fraction": 0.34},
            "env": {"window_w": 3, "rollout_h": 10, "start_offset_max": 5},
            "model": {"hidden": [8]},
            "sac": {"batch_size": 32, "n_quantiles": 4, "updates_per_episode": 2},
            "sl": {"batch_size": 32, "minibatches_per_round": 3},
            "eval": {"lengths": [10, 50, 500], "n_episodes": 2},
        }
    )
    return manager


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(autouse=True)
def _reset_package_logger():
    yield
    root = logging.getLogger("fwdlearn")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.setLevel(logging.NOTSET)
    root.propagate = True
