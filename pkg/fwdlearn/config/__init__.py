"""Fwdlearn Configuration"""

from fwdlearn.config.manager import ConfigManager
from fwdlearn.config.manager import DataConfig
from fwdlearn.config.manager import EvalConfig
from fwdlearn.config.manager import RunConfig

__all__ = ("ConfigManager", "DataConfig", "EvalConfig", "RunConfig")
