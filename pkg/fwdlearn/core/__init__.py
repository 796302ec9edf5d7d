"""Fwdlearn Core"""

from fwdlearn.core.events import RunEventDispatcher
from fwdlearn.core.exceptions import FwdlearnError
from fwdlearn.core.logs import configure_logging

__all__ = ("FwdlearnError", "RunEventDispatcher", "configure_logging")
