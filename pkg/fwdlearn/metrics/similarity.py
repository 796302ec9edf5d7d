"""Fwdlearn Trajectory Similarity

Loss and similarity measures between a true trajectory ``y`` and a predicted
trajectory ``yhat``, both arrays of shape ``[T, D]`` (a 1-D array is read as
``[T, 1]``).

Available measures:
    - rollout_loss            sum over time of per-step Euclidean errors
    - z_e                     composite distance ``(1 + L2)(1 + corr)(1 + KL)``, >= 1
    - simplified_similarity   mean of time, frequency and power scores, in [0, 1]
    - rmse_rollout_metric     root mean squared error over all entries

Conventions for ``z_e``:
    - The L2 term is the plain sum of squared errors (not normalized by T).
    - The derivative term is the correlation distance between the flattened
      forward differences. Identical differences give 0, two constant
      sequences give 0, exactly one constant sequence gives 1, and ``T < 2``
      counts as both constant.
    - The KL term turns each dimension into a distribution over time with a
      softmax and sums ``KL(p_y || p_yhat)`` over dimensions.

All functions are pure and thread-safe.

License: MIT
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from scipy.spatial.distance import correlation
from scipy.special import log_softmax

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import InputDomainError
from fwdlearn.core.exceptions import ShapeError

__all__ = [
    "SIMILARITIES",
    "as_trajectory",
    "rollout_loss",
    "z_e",
    "z_e_terms",
    "simplified_similarity",
    "rmse_rollout_metric",
    "similarity_reward",
]


def as_trajectory(values) -> np.ndarray:
    """Coerce *values* to a finite ``[T, D]`` float array with ``T >= 1``."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ShapeError(f"trajectory must be [T, D] with T >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputDomainError("trajectory contains non-finite values")
    return arr


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y, yhat = as_trajectory(y), as_trajectory(yhat)
    if y.shape != yhat.shape:
        raise ShapeError(f"trajectory shapes differ: {y.shape} vs {yhat.shape}")
    return y, yhat


# region Losses


def rollout_loss(y, yhat) -> float:
    """Sum over time of ``||y_t - yhat_t||``."""
    y, yhat = _pair(y, yhat)
    return float(np.linalg.norm(y - yhat, axis=1).sum())


def rmse_rollout_metric(y, yhat) -> float:
    """Root mean squared error over all ``T * D`` entries."""
    y, yhat = _pair(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


# endregion

# region Composite distance


def _derivative_distance(y: np.ndarray, yhat: np.ndarray) -> float:
    if y.shape[0] < 2:
        return 0.0
    dy = np.diff(y, axis=0).ravel()
    dyhat = np.diff(yhat, axis=0).ravel()
    if np.array_equal(dy, dyhat):
        return 0.0
    flat_y = np.ptp(dy) == 0.0
    flat_yhat = np.ptp(dyhat) == 0.0
    if flat_y and flat_yhat:
        return 0.0
    if flat_y or flat_yhat:
        return 1.0
    distance = correlation(dy, dyhat)
    if not np.isfinite(distance):
        return 1.0
    return float(np.clip(distance, 0.0, 2.0))


def _kl_over_time(y: np.ndarray, yhat: np.ndarray) -> float:
    log_p = log_softmax(y, axis=0)
    log_q = log_softmax(yhat, axis=0)
    kl = float(np.sum(np.exp(log_p) * (log_p - log_q)))
    return max(kl, 0.0)


def z_e_terms(y, yhat) -> tuple[float, float, float]:
    """The three distances ``(l2, derivative correlation, kl)`` behind :func:`z_e`."""
    y, yhat = _pair(y, yhat)
    l2 = float(np.sum((y - yhat) ** 2))
    return l2, _derivative_distance(y, yhat), _kl_over_time(y, yhat)


def z_e(y, yhat) -> float:
    """Composite trajectory distance; exactly 1 for identical trajectories.

    Not symmetric: the KL term compares ``y`` against ``yhat``.
    """
    l2, corr, kl = z_e_terms(y, yhat)
    return (1.0 + l2) * (1.0 + corr) * (1.0 + kl)


# endregion

# region Simplified similarity


def simplified_similarity(y, yhat) -> float:
    """Mean of three scores in ``[0, 1]``.

    - time: ``1 / (1 + RMSE(y, yhat))``
    - frequency: ``1 / (1 + RMSE(|rfft(y)|, |rfft(yhat)|))``, spectra along time
    - power: ``1 / (1 + sum_d |var(y_d) - var(yhat_d)|)``

    Raises:
        ShapeError: On mismatched shapes or ``T < 2``.
    """
    y, yhat = _pair(y, yhat)
    if y.shape[0] < 2:
        raise ShapeError("simplified_similarity needs at least two time steps")
    time_score = 1.0 / (1.0 + np.sqrt(np.mean((y - yhat) ** 2)))
    spectrum = np.abs(np.fft.rfft(y, axis=0))
    spectrum_hat = np.abs(np.fft.rfft(yhat, axis=0))
    freq_score = 1.0 / (1.0 + np.sqrt(np.mean((spectrum - spectrum_hat) ** 2)))
    power_score = 1.0 / (1.0 + np.sum(np.abs(np.var(y, axis=0) - np.var(yhat, axis=0))))
    return float((time_score + freq_score + power_score) / 3.0)


# endregion

SIMILARITIES: dict[str, Callable[[np.ndarray, np.ndarray], float]] = {
    "z_e": z_e,
    "simplified": simplified_similarity,
}


def similarity_reward(choice: str, y, yhat) -> float:
    """Rollout-end reward of the similarity measure *choice*.

    ``z_e`` is a distance, so the reward is ``1 - z_e`` (0 for a perfect
    rollout); ``simplified`` is already a score and is returned as is.
    A single-step ``simplified`` segment falls back to its time score.
    """
    if choice == "z_e":
        return 1.0 - z_e(y, yhat)
    if choice == "simplified":
        y, yhat = _pair(y, yhat)
        if y.shape[0] < 2:
            return float(1.0 / (1.0 + np.sqrt(np.mean((y - yhat) ** 2))))
        return simplified_similarity(y, yhat)
    raise ConfigError(f"unknown similarity {choice!r}; choose from {sorted(SIMILARITIES)}")
