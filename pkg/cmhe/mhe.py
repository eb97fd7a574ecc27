"""
Moving Horizon Estimation for a one-section constant-curvature robot.

Each window of N measurements becomes a box-constrained least-squares
problem over the N stacked states. The residual stacks, per stage:

- measurement terms  sqrt(V) (z_k - h(x_k)), in degrees when configured,
- process terms      sqrt(W) (x_{k+1} - step(x_k, u_k)),
- kinematic anchors  sqrt(K) (p_k - m(theta_k, phi_k)) when K > 0.

``run_sliding`` slides the window over a measurement stream, warm-starting
each solve from the previous solution shifted by one stage.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import EstimatorConfig
from .errors import InvalidArgumentError
from .kinematics import invert, measurement, measurement_jacobian, shape_jacobian, tip_position
from .models import SolveReport
from .motion import derivative, propagate, reconstruct_inputs
from .solver import NlsProblem, solve

logger = logging.getLogger(__name__)

STATE_DIM = 5
SHAPE_FD_STEP = 1e-4


@dataclass(frozen=True)
class Weights:
    """Square roots of the residual weights, ready to multiply residuals."""

    measurement: np.ndarray   # (2,)
    process: np.ndarray       # (5,)
    kinematic: float

    @classmethod
    def from_config(cls, cfg: EstimatorConfig) -> "Weights":
        scale = 180.0 / np.pi if cfg.measurement_residual_degrees else 1.0
        return cls(
            measurement=np.sqrt(np.asarray(cfg.v_diag, dtype=float)) * scale,
            process=np.sqrt(np.asarray(cfg.w_diag, dtype=float)),
            kinematic=float(np.sqrt(cfg.kinematic_weight)),
        )


@dataclass
class MheProblem:
    """One horizon window: N measurements, N-1 inputs and an N-stage initial guess."""

    measurements: np.ndarray
    inputs: np.ndarray
    guess: np.ndarray
    config: EstimatorConfig

    def __post_init__(self):
        self.measurements = np.asarray(self.measurements, dtype=float).reshape(-1, 2)
        self.inputs = np.asarray(self.inputs, dtype=float).reshape(-1, 2)
        self.guess = np.asarray(self.guess, dtype=float).reshape(-1, STATE_DIM)
        _check_window(self.measurements, self.inputs, self.guess, self.config)


@dataclass
class MheEstimate:
    """Optimised window states, the weighted cost ||r||^2 and the solver report."""

    states: np.ndarray
    cost: float
    report: SolveReport


@dataclass
class SlidingResult:
    """Per-sample estimates of a sliding-window run (NaN rows where none exist)."""

    estimates: np.ndarray
    horizon: int
    solve_times: List[float] = field(default_factory=list)
    costs: List[float] = field(default_factory=list)
    iterations: List[int] = field(default_factory=list)

    @property
    def solve_count(self) -> int:
        return len(self.solve_times)

    @property
    def first_index(self) -> int:
        return self.horizon - 1

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.estimates[:, 0])


def _check_window(measurements: np.ndarray, inputs: np.ndarray, guess: np.ndarray, cfg: EstimatorConfig) -> None:
    N = cfg.horizon
    if measurements.shape[0] != N:
        raise InvalidArgumentError(f"window has {measurements.shape[0]} measurements, horizon is {N}")
    if inputs.shape[0] != N - 1:
        raise InvalidArgumentError(f"window has {inputs.shape[0]} inputs, expected {N - 1}")
    if guess.shape[0] != N:
        raise InvalidArgumentError(f"initial guess has {guess.shape[0]} stages, expected {N}")


def residual_size(cfg: EstimatorConfig) -> int:
    """Number of residual components for a window of the configured horizon."""
    N = cfg.horizon
    anchors = 3 * N if cfg.kinematic_weight > 0 else 0
    return 2 * N + STATE_DIM * (N - 1) + anchors


def build_problem(measurements, inputs, cfg: EstimatorConfig, guess) -> NlsProblem:
    """
    Build the least-squares problem of one horizon window.

    Args:
        measurements: Array (N, 2) of (gamma, beta)
        inputs: Array (N-1, 2) of (theta_dot, phi_dot)
        cfg: Estimator configuration (horizon, weights, bounds, dt, s)
        guess: Array (N, 5); only its shape is checked here

    Returns:
        NlsProblem over the stacked 5N decision vector with an analytic Jacobian

    Raises:
        InvalidArgumentError: If sequence lengths do not match the horizon
    """
    Z = np.asarray(measurements, dtype=float).reshape(-1, 2)
    U = np.asarray(inputs, dtype=float).reshape(-1, 2)
    _check_window(Z, U, np.asarray(guess, dtype=float).reshape(-1, STATE_DIM), cfg)

    N, s, dt = cfg.horizon, cfg.robot_length, cfg.dt
    weights = Weights.from_config(cfg)
    anchored = weights.kinematic > 0
    m_rows = 2 * N
    p_rows = STATE_DIM * (N - 1)
    total = residual_size(cfg)

    def residual(v: np.ndarray) -> np.ndarray:
        X = v.reshape(N, STATE_DIM)
        parts = [(weights.measurement * (Z - measurement(X[:, 3], X[:, 4]))).ravel()]
        if N > 1:
            predicted = propagate(X[:-1], U, dt, s)
            parts.append((weights.process * (X[1:] - predicted)).ravel())
        if anchored:
            tips = tip_position(X[:, 3], X[:, 4], s)
            parts.append((weights.kinematic * (X[:, :3] - tips)).ravel())
        return np.concatenate(parts)

    def jacobian(v: np.ndarray) -> np.ndarray:
        X = v.reshape(N, STATE_DIM)
        Jr = np.zeros((total, STATE_DIM * N))

        H = measurement_jacobian(X[:, 3], X[:, 4])
        for k in range(N):
            Jr[2 * k:2 * k + 2, 5 * k + 3:5 * k + 5] = -weights.measurement[:, None] * H[k]

        if N > 1:
            df = _shape_sensitivity(X[:-1], U, s)
            eye = np.eye(STATE_DIM)
            for k in range(N - 1):
                rows = slice(m_rows + 5 * k, m_rows + 5 * k + 5)
                transition = eye.copy()
                transition[:, 3:5] += dt * df[k]
                Jr[rows, 5 * k:5 * k + 5] = -weights.process[:, None] * transition
                Jr[rows, 5 * (k + 1):5 * (k + 1) + 5] = np.diag(weights.process)

        if anchored:
            Jp = shape_jacobian(X[:, 3], X[:, 4], s)
            base = m_rows + p_rows
            for k in range(N):
                rows = slice(base + 3 * k, base + 3 * k + 3)
                Jr[rows, 5 * k:5 * k + 3] = weights.kinematic * np.eye(3)
                Jr[rows, 5 * k + 3:5 * k + 5] = -weights.kinematic * Jp[k]

        return Jr

    lower = np.tile(cfg.lower_bounds, N)
    upper = np.tile(cfg.upper_bounds, N)
    return NlsProblem(residual=residual, lower=lower, upper=upper, jacobian=jacobian)


def _shape_sensitivity(states: np.ndarray, inputs: np.ndarray, s: float) -> np.ndarray:
    """Central-difference d f / d(theta, phi) per stage, shape (K, 5, 2)."""
    h = SHAPE_FD_STEP
    columns = []
    for index in (3, 4):
        plus, minus = states.copy(), states.copy()
        plus[:, index] += h
        minus[:, index] -= h
        columns.append((derivative(plus, inputs, s) - derivative(minus, inputs, s)) / (2 * h))
    return np.stack(columns, axis=-1)


def initial_guess(measurements, cfg: EstimatorConfig) -> np.ndarray:
    """
    States obtained by inverting each measurement and running forward kinematics,
    clamped into the workspace box.
    """
    Z = np.asarray(measurements, dtype=float).reshape(-1, 2)
    theta, phi = invert(Z[:, 0], Z[:, 1])
    tips = tip_position(theta, phi, cfg.robot_length)
    states = np.column_stack([tips, theta, phi])
    return np.clip(states, cfg.lower_bounds, cfg.upper_bounds)


def estimate_window(problem: MheProblem) -> MheEstimate:
    """
    Solve one horizon window.

    Returns:
        MheEstimate with N states inside the box and cost ||r||^2

    Raises:
        NumericFailureError: Propagated from the solver
    """
    cfg = problem.config
    nls = build_problem(problem.measurements, problem.inputs, cfg, problem.guess)
    report = solve(nls, problem.guess.ravel(), cfg.solver)
    states = report.solution.reshape(cfg.horizon, STATE_DIM)
    return MheEstimate(states=states, cost=2.0 * report.cost, report=report)


def run_sliding(measurements, cfg: EstimatorConfig, inputs: Optional[np.ndarray] = None) -> SlidingResult:
    """
    Sliding-window MHE over a measurement stream.

    For k = 0..M-N-1 the window z_k..z_{k+N-1} is solved and its final stage
    becomes the estimate of sample k+N-1. Samples before N-1 and the final
    sample carry no estimate (NaN rows).

    Args:
        measurements: Array (M, 2) of (gamma, beta)
        cfg: Estimator configuration
        inputs: Optional known inputs (M-1, 2); reconstructed from the
            measurements when omitted

    Returns:
        SlidingResult with an (M, 5) estimate array and per-solve timing

    Raises:
        InvalidArgumentError: If M <= N or the inputs have the wrong length
    """
    Z = np.asarray(measurements, dtype=float).reshape(-1, 2)
    M, N = Z.shape[0], cfg.horizon
    if M <= N:
        raise InvalidArgumentError(f"need more measurements than the horizon: M={M}, N={N}")

    if inputs is None:
        U = reconstruct_inputs(Z, cfg.dt, cfg.input_filter_window)
    else:
        U = np.asarray(inputs, dtype=float).reshape(-1, 2)
        if U.shape[0] != M - 1:
            raise InvalidArgumentError(f"expected {M - 1} inputs, got {U.shape[0]}")

    result = SlidingResult(estimates=np.full((M, STATE_DIM), np.nan), horizon=N)
    guess = initial_guess(Z[:N], cfg)
    logger.info(f"Running MHE: {M} samples, horizon {N}, {M - N} solves")

    for k in range(M - N):
        problem = MheProblem(measurements=Z[k:k + N], inputs=U[k:k + N - 1], guess=guess, config=cfg)
        estimate = estimate_window(problem)
        result.estimates[k + N - 1] = estimate.states[-1]
        result.solve_times.append(estimate.report.wall_time)
        result.costs.append(estimate.cost)
        result.iterations.append(estimate.report.iterations)
        logger.debug(
            f"Window {k}: cost {estimate.cost:.3e}, {estimate.report.iterations} iterations, "
            f"{estimate.report.termination.value}"
        )
        guess = np.vstack([estimate.states[1:], estimate.states[-1:]])

    return result
