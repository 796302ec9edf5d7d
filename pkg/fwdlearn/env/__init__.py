"""Fwdlearn Environments"""

from fwdlearn.env.forward import FwdEnvConfig
from fwdlearn.env.forward import ForwardModelEnv
from fwdlearn.env.forward import delta_bounds
from fwdlearn.env.forward import integrate_delta
from fwdlearn.env.forward import split_state

__all__ = ("FwdEnvConfig", "ForwardModelEnv", "delta_bounds", "integrate_delta", "split_state")
