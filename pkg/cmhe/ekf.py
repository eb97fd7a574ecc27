"""
Extended Kalman filter baseline.

Uses the same forward-Euler motion model and roll/pitch measurement model as
the MHE. The filter is unconstrained: means may leave the workspace box.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .config import EstimatorConfig
from .errors import InvalidArgumentError, NumericFailureError
from .kinematics import invert, measurement, measurement_jacobian, tip_position
from .models import Measurement
from .motion import as_input_array, as_measurement_array, as_state_array, propagate, reconstruct_inputs
from .utils.numerics import numerical_jacobian

logger = logging.getLogger(__name__)

TRANSITION_FD_STEP = 1e-5


@dataclass(frozen=True)
class EkfState:
    """Filter mean (x, y, z, theta, phi) and its 5x5 covariance."""

    mean: np.ndarray
    covariance: np.ndarray


@dataclass(frozen=True)
class EkfNoise:
    """Process and measurement noise covariances."""

    Q: np.ndarray
    R: np.ndarray

    @classmethod
    def from_config(cls, cfg: EstimatorConfig) -> "EkfNoise":
        return cls(Q=cfg.ekf.Q, R=cfg.ekf.R)


@dataclass
class EkfResult:
    """Per-sample filter output."""

    estimates: np.ndarray     # (M, 5)
    covariances: np.ndarray   # (M, 5, 5)
    wall_time: float


def transition_jacobian(x, u, dt: float, s: float = 1.0) -> np.ndarray:
    """Central-difference Jacobian of the Euler step with respect to the state."""
    u = as_input_array(u)
    return numerical_jacobian(lambda v: propagate(v, u, dt, s), as_state_array(x), TRANSITION_FD_STEP)


def predict(state: EkfState, u, dt: float, Q: np.ndarray, s: float = 1.0) -> EkfState:
    """
    Propagate mean and covariance one sample.

    Args:
        state: Prior filter state
        u: Shape-rate input applied over the sample
        dt: Sample time in seconds
        Q: Process-noise covariance (5x5)
        s: Arc length

    Returns:
        Predicted EkfState with P' = F P F^T + Q
    """
    if not dt > 0:
        raise InvalidArgumentError(f"sample time must be positive, got {dt!r}")
    F = transition_jacobian(state.mean, u, dt, s)
    mean = propagate(state.mean, as_input_array(u), dt, s)
    P = F @ state.covariance @ F.T + np.asarray(Q, dtype=float)
    return EkfState(mean=mean, covariance=0.5 * (P + P.T))


def kalman_update(mean: np.ndarray, P: np.ndarray, innovation: np.ndarray, H: np.ndarray, R: np.ndarray) -> EkfState:
    """
    Linear Kalman correction with a Joseph-form covariance update.

    Raises:
        NumericFailureError: If the innovation covariance is not positive definite
            or the innovation is non-finite
    """
    innovation = np.atleast_1d(np.asarray(innovation, dtype=float))
    if not np.all(np.isfinite(innovation)):
        raise NumericFailureError("non-finite innovation", iterate=mean)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))

    S = H @ P @ H.T + R
    try:
        factor = cho_factor(0.5 * (S + S.T))
    except LinAlgError as e:
        raise NumericFailureError(f"singular innovation covariance: {e}", iterate=mean) from e

    K = cho_solve(factor, H @ P).T
    updated_mean = np.asarray(mean, dtype=float) + K @ innovation
    A = np.eye(P.shape[0]) - K @ H
    P_post = A @ P @ A.T + K @ R @ K.T
    return EkfState(mean=updated_mean, covariance=0.5 * (P_post + P_post.T))


def update(state: EkfState, z, R: np.ndarray) -> EkfState:
    """
    Correct the state with one roll/pitch measurement.

    H is zero except for the (theta, phi) columns, which hold the analytic
    measurement Jacobian.

    Raises:
        NumericFailureError: On a singular innovation covariance
    """
    z = z.as_array() if isinstance(z, Measurement) else np.asarray(z, dtype=float).reshape(2)
    theta, phi = state.mean[3], state.mean[4]
    H = np.zeros((2, 5))
    H[:, 3:5] = measurement_jacobian(theta, phi)
    innovation = z - measurement(theta, phi)
    return kalman_update(state.mean, state.covariance, innovation, H, R)


def initial_state(z, cfg: EstimatorConfig) -> EkfState:
    """Mean from inverting the first measurement; covariance from the P0 setting."""
    z = z.as_array() if isinstance(z, Measurement) else np.asarray(z, dtype=float).reshape(2)
    theta, phi = invert(z[0], z[1])
    mean = np.concatenate([tip_position(theta, phi, cfg.robot_length), [float(theta), float(phi)]])
    return EkfState(mean=mean, covariance=cfg.ekf.P0)


def run_filter(
    measurements,
    cfg: EstimatorConfig,
    inputs: Optional[np.ndarray] = None,
    initial: Optional[EkfState] = None,
) -> EkfResult:
    """
    Filter a measurement stream.

    Sample 0 is a pure update of the initial state; every later sample is
    predicted with the preceding input and then updated.

    Args:
        measurements: Sequence of Measurement or array (M, 2)
        cfg: Estimator configuration (dt, s, EKF tuning)
        inputs: Optional known inputs (M-1, 2); reconstructed when omitted
        initial: Optional initial filter state

    Returns:
        EkfResult with M means and covariances

    Raises:
        InvalidArgumentError: On an empty stream or mismatched inputs
        NumericFailureError: Propagated from ``update``
    """
    Z = as_measurement_array(measurements)
    M = Z.shape[0]
    if M < 1:
        raise InvalidArgumentError("need at least one measurement")

    if inputs is not None:
        U = np.asarray(inputs, dtype=float).reshape(-1, 2)
        if U.shape[0] != M - 1:
            raise InvalidArgumentError(f"expected {M - 1} inputs, got {U.shape[0]}")
    elif M > 1:
        U = reconstruct_inputs(Z, cfg.dt, cfg.input_filter_window)
    else:
        U = np.zeros((0, 2))

    noise = EkfNoise.from_config(cfg)
    started = time.perf_counter()
    state = initial if initial is not None else initial_state(Z[0], cfg)
    estimates = np.empty((M, 5))
    covariances = np.empty((M, 5, 5))

    for k in range(M):
        if k > 0:
            state = predict(state, U[k - 1], cfg.dt, noise.Q, cfg.robot_length)
        state = update(state, Z[k], noise.R)
        estimates[k] = state.mean
        covariances[k] = state.covariance

    wall_time = time.perf_counter() - started
    logger.info(f"EKF filtered {M} samples in {wall_time:.3f}s")
    return EkfResult(estimates=estimates, covariances=covariances, wall_time=wall_time)
