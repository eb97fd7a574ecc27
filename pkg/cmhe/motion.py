"""
Discrete-time kinematic motion model and input reconstruction.

The state derivative stacks the tip velocity J(theta, phi) u on top of the
shape rates u; ``step`` integrates it with forward Euler. Array variants
(``derivative``, ``propagate``) operate on stacked states of shape (..., 5).
"""

import logging
from typing import Sequence, Union

import numpy as np

from .errors import InvalidArgumentError
from .kinematics import invert, shape_jacobian
from .models import Measurement, RobotState, VelocityInput
from .utils.numerics import moving_average, wrap_angle

logger = logging.getLogger(__name__)

StateLike = Union[RobotState, np.ndarray]
InputLike = Union[VelocityInput, np.ndarray, Sequence[float]]


def as_state_array(x: StateLike) -> np.ndarray:
    return x.as_array() if isinstance(x, RobotState) else np.asarray(x, dtype=float)


def as_input_array(u: InputLike) -> np.ndarray:
    return u.as_array() if isinstance(u, VelocityInput) else np.asarray(u, dtype=float)


def derivative(states: np.ndarray, inputs: np.ndarray, s: float) -> np.ndarray:
    """
    Vectorised state derivative [J(theta, phi) u; u].

    Args:
        states: Array (..., 5) of (x, y, z, theta, phi)
        inputs: Array (..., 2) of (theta_dot, phi_dot)
        s: Arc length

    Returns:
        Array (..., 5)
    """
    states = np.asarray(states, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    J = shape_jacobian(states[..., 3], states[..., 4], s)
    velocity = np.einsum("...ij,...j->...i", J, inputs)
    return np.concatenate([velocity, inputs], axis=-1)


def propagate(states: np.ndarray, inputs: np.ndarray, dt: float, s: float) -> np.ndarray:
    """Vectorised forward-Euler transition x + dt * f(x, u)."""
    states = np.asarray(states, dtype=float)
    return states + dt * derivative(states, inputs, s)


def state_derivative(x: StateLike, u: InputLike, s: float = 1.0) -> np.ndarray:
    """
    Time derivative of the state under shape-rate input ``u``.

    Args:
        x: Current state
        u: Shape-parameter velocities
        s: Arc length of the robot

    Returns:
        5-vector per second
    """
    return derivative(as_state_array(x), as_input_array(u), s)


def step(x: StateLike, u: InputLike, dt: float, s: float = 1.0) -> RobotState:
    """
    Advance the state one sample with forward Euler.

    Raises:
        InvalidArgumentError: If ``dt`` is not positive
    """
    if not dt > 0:
        raise InvalidArgumentError(f"sample time must be positive, got {dt!r}")
    return RobotState.from_array(propagate(as_state_array(x), as_input_array(u), dt, s))


def as_measurement_array(measurements) -> np.ndarray:
    if len(measurements) and isinstance(measurements[0], Measurement):
        return np.array([m.as_array() for m in measurements], dtype=float)
    return np.asarray(measurements, dtype=float).reshape(-1, 2)


def reconstruct_inputs(measurements, dt: float, window: int = 1) -> np.ndarray:
    """
    Shape-rate inputs from consecutive IMU readings.

    Each reading is inverted to (theta, phi); the rates are the differences of
    consecutive pairs over ``dt`` with phi differences wrapped into (-pi, pi].

    Args:
        measurements: Sequence of Measurement or array (M, 2) of (gamma, beta)
        dt: Sample time in seconds
        window: Centred moving-average length applied to the inverted angles (1 = off)

    Returns:
        Array (M - 1, 2) of (theta_dot, phi_dot)

    Raises:
        InvalidArgumentError: With fewer than two measurements or non-positive ``dt``
    """
    z = as_measurement_array(measurements)
    if z.shape[0] < 2:
        raise InvalidArgumentError(f"need at least 2 measurements to reconstruct inputs, got {z.shape[0]}")
    if not dt > 0:
        raise InvalidArgumentError(f"sample time must be positive, got {dt!r}")
    if not np.all(np.isfinite(z)):
        raise InvalidArgumentError("measurements contain non-finite values")

    theta, phi = invert(z[:, 0], z[:, 1])
    if window > 1:
        theta = moving_average(theta, window)
        phi = moving_average(np.unwrap(phi), window)
        logger.debug(f"Smoothed inverted angles with window {window}")

    theta_dot = np.diff(theta) / dt
    phi_dot = wrap_angle(np.diff(phi)) / dt
    return np.stack([theta_dot, phi_dot], axis=-1)
