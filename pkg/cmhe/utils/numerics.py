"""Small numeric helpers shared by the estimators."""

from typing import Callable

import numpy as np
import pandas as pd


def numerical_jacobian(
        func: Callable[[np.ndarray], np.ndarray],
        x: np.ndarray,
        h: float = 1e-6
) -> np.ndarray:
    """
    Two-sided finite-difference Jacobian.

    Args:
        func: Vector function of a vector argument
        x: Point at which to evaluate the Jacobian
        h: Step size for the central differences

    Returns:
        Jacobian matrix J where J[i, j] = d func_i / d x_j
    """
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(func(x), dtype=float)
    J = np.zeros((f0.size, x.size))

    for j in range(x.size):
        x_plus = x.copy()
        x_minus = x.copy()
        x_plus[j] += h
        x_minus[j] -= h
        J[:, j] = (np.asarray(func(x_plus)) - np.asarray(func(x_minus))).ravel() / (2.0 * h)

    return J


def wrap_angle(angle):
    """Wrap angles into (-pi, pi]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def moving_average(series: np.ndarray, window: int) -> np.ndarray:
    """
    Centred moving average along the first axis; the window shrinks at the ends.

    A window of 1 returns the series unchanged.
    """
    series = np.asarray(series, dtype=float)
    if window <= 1:
        return series.copy()
    span = 2 * (window // 2) + 1
    smoothed = pd.DataFrame(series).rolling(span, center=True, min_periods=1).mean()
    return smoothed.to_numpy().reshape(series.shape)
