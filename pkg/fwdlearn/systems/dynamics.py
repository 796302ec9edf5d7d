"""Fwdlearn Reference Systems

Built-in dynamical systems standing in for recorded plant data.

Available systems:
    - pendulum  damped, torque-driven pendulum (nonlinear); state ``(theta, omega)``
    - msd       mass-spring-damper (linear); state ``(x, v)``

Both integrate with semi-implicit Euler: the velocity is updated first and
the position advances with the *new* velocity, so
``position_{t+1} - position_t == dt * velocity_{t+1}`` exactly as the
forward-model environment reconstructs velocities from position deltas.

Example:
    spec = make_system("pendulum")
    nxt = step_system(np.array([0.0, 1.0]), np.array([0.0]), spec)

License: MIT
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import InputDomainError
from fwdlearn.core.exceptions import ShapeError
from fwdlearn.systems.base import SystemSpec

__all__ = [
    "SYSTEMS",
    "make_system",
    "step_system",
    "step_pendulum",
    "step_msd",
    "wrap_angle",
    "pendulum_energy",
]

_PENDULUM_DEFAULTS = {"g": 9.81, "l": 1.0, "m": 1.0, "c": 0.1}
_MSD_DEFAULTS = {"k": 1.0, "m": 1.0, "c": 0.2}


def wrap_angle(theta: np.ndarray | float) -> np.ndarray:
    """Wrap angles to ``(-pi, pi]``."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(theta, dtype=np.float64), 2.0 * np.pi)
    # np.mod rounds up to 2 pi for tiny negative arguments
    return np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)


def _check_inputs(state, action, spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    state = np.asarray(state, dtype=np.float64)
    action = np.asarray(action, dtype=np.float64).reshape(-1)
    if state.shape != (spec.state_dim,):
        raise ShapeError(f"{spec.name}: expected state of shape ({spec.state_dim},), got {state.shape}")
    if action.shape != (spec.action_dim,):
        raise ShapeError(f"{spec.name}: expected action of shape ({spec.action_dim},), got {action.shape}")
    if not (np.all(np.isfinite(state)) and np.all(np.isfinite(action))):
        raise InputDomainError(f"{spec.name}: non-finite input state={state.tolist()} action={action.tolist()}")
    return state, action


def step_pendulum(state, action, spec: SystemSpec) -> np.ndarray:
    """Advance the pendulum by one step.

    ``omega' = omega + dt * (-(g/l) sin(theta) - c omega + u / (m l^2))``,
    ``theta' = wrap(theta + dt * omega')``.
    """
    (theta, omega), (u,) = _check_inputs(state, action, spec)
    p = spec.params
    g, length, m, c = p.get("g", 9.81), p.get("l", 1.0), p.get("m", 1.0), p.get("c", 0.1)
    omega_next = omega + spec.dt * (-(g / length) * math.sin(theta) - c * omega + u / (m * length**2))
    theta_next = float(wrap_angle(theta + spec.dt * omega_next))
    return np.array([theta_next, omega_next])


def step_msd(state, action, spec: SystemSpec) -> np.ndarray:
    """Advance the mass-spring-damper by one step.

    ``v' = v + dt * (-(k/m) x - (c/m) v + u/m)``, ``x' = x + dt * v'``.
    """
    (x, v), (u,) = _check_inputs(state, action, spec)
    p = spec.params
    k, m, c = p.get("k", 1.0), p.get("m", 1.0), p.get("c", 0.2)
    v_next = v + spec.dt * (-(k / m) * x - (c / m) * v + u / m)
    x_next = x + spec.dt * v_next
    return np.array([x_next, v_next])


def pendulum_energy(state, spec: SystemSpec) -> float:
    """Total mechanical energy, zero at the resting bottom position."""
    theta, omega = np.asarray(state, dtype=np.float64)
    p = spec.params
    g, length, m = p.get("g", 9.81), p.get("l", 1.0), p.get("m", 1.0)
    return 0.5 * m * length**2 * omega**2 + m * g * length * (1.0 - math.cos(theta))


_STEPPERS: dict[str, Callable[[np.ndarray, np.ndarray, SystemSpec], np.ndarray]] = {
    "pendulum": step_pendulum,
    "msd": step_msd,
}

SYSTEMS: dict[str, SystemSpec] = {
    "pendulum": SystemSpec(
        name="pendulum",
        state_dim=2,
        action_dim=1,
        dt=0.05,
        action_low=(-2.0,),
        action_high=(2.0,),
        params=_PENDULUM_DEFAULTS,
        n_pos=1,
        angle_dims=(0,),
        init_low=(-math.pi, -1.0),
        init_high=(math.pi, 1.0),
    ),
    "msd": SystemSpec(
        name="msd",
        state_dim=2,
        action_dim=1,
        dt=0.05,
        action_low=(-1.0,),
        action_high=(1.0,),
        params=_MSD_DEFAULTS,
        n_pos=1,
        init_low=(-1.0, -1.0),
        init_high=(1.0, 1.0),
    ),
}


def make_system(name: str, dt: float | None = None, **params: float) -> SystemSpec:
    """Return the built-in system *name*, optionally with a different ``dt`` or constants.

    Raises:
        ConfigError: If *name* is not a built-in system or a constant is unknown.
    """
    try:
        base = SYSTEMS[name]
    except KeyError as exc:
        raise ConfigError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from exc
    unknown = set(params) - set(base.params)
    if unknown:
        raise ConfigError(f"{name}: unknown parameters {sorted(unknown)}")
    spec = base.to_dict()
    spec["params"].update({k: float(v) for k, v in params.items()})
    if dt is not None:
        spec["dt"] = float(dt)
    return SystemSpec.from_dict(spec)


def step_system(state, action, spec: SystemSpec) -> np.ndarray:
    """Dispatch to the stepper registered for ``spec.name``."""
    try:
        stepper = _STEPPERS[spec.name]
    except KeyError as exc:
        raise ConfigError(f"no stepper for system {spec.name!r}") from exc
    return stepper(state, action, spec)
