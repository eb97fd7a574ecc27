"""
Box-constrained nonlinear least squares.

Minimises 0.5 * ||r(v)||^2 subject to lo <= v <= hi with a projected
Levenberg-Marquardt iteration: each iteration first tries the Gauss-Newton
step on the free variables, then falls back to damped steps. Trial points are
projected onto the box and accepted only if they lower the cost.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgumentError, NumericFailureError
from .models import SolveReport, SolverSettings, TerminationReason
from .utils.numerics import numerical_jacobian

logger = logging.getLogger(__name__)

DAMPING_MIN = 1e-12
DAMPING_MAX = 1e16
FD_STEP = 1e-7


@dataclass(frozen=True)
class NlsProblem:
    """Weighted residual function with optional Jacobian and box bounds."""

    residual: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise InvalidArgumentError(f"bound shapes differ: {lower.shape} vs {upper.shape}")
        if np.any(lower > upper):
            raise InvalidArgumentError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.size

    def clamp(self, v: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(v, dtype=float), self.lower, self.upper)

    def evaluate(self, v: np.ndarray) -> np.ndarray:
        r = np.asarray(self.residual(v), dtype=float).ravel()
        if not np.all(np.isfinite(r)):
            raise NumericFailureError("residual returned non-finite values", iterate=v)
        return r

    def evaluate_jacobian(self, v: np.ndarray) -> np.ndarray:
        if self.jacobian is not None:
            J = np.asarray(self.jacobian(v), dtype=float)
        else:
            J = finite_difference_jacobian(self, v)
        if not np.all(np.isfinite(J)):
            raise NumericFailureError("Jacobian contains non-finite values", iterate=v)
        return J


def finite_difference_jacobian(problem: NlsProblem, v: np.ndarray) -> np.ndarray:
    """Central-difference residual Jacobian with a step scaled to |v|."""
    h = FD_STEP * max(1.0, float(np.max(np.abs(v)))) if np.size(v) else FD_STEP
    return numerical_jacobian(problem.residual, v, h)


def cost(problem: NlsProblem, v: np.ndarray) -> float:
    """Internal cost 0.5 * ||r(v)||^2."""
    r = problem.evaluate(v)
    return 0.5 * float(r @ r)


def _projected_gradient_norm(problem: NlsProblem, v: np.ndarray, g: np.ndarray) -> float:
    return float(np.max(np.abs(v - problem.clamp(v - g)), initial=0.0))


def solve(problem: NlsProblem, v0: np.ndarray, settings: Optional[SolverSettings] = None) -> SolveReport:
    """
    Minimise 0.5 * ||r(v)||^2 inside the box of ``problem``.

    Args:
        problem: Residual, optional Jacobian and bounds
        v0: Starting point; clamped into the box before iterating
        settings: Iteration limits, tolerances and damping seed

    Returns:
        SolveReport with the projected solution, final internal cost,
        iteration count, termination reason and wall time

    Raises:
        NumericFailureError: If the residual or Jacobian becomes non-finite
    """
    settings = settings or SolverSettings()
    started = time.perf_counter()

    v = problem.clamp(np.asarray(v0, dtype=float).ravel())
    if v.size != problem.n:
        raise InvalidArgumentError(f"start point has {v.size} entries, expected {problem.n}")
    r = problem.evaluate(v)
    f = 0.5 * float(r @ r)
    history = [f]
    damping = settings.damping_init
    termination = TerminationReason.MAX_ITER
    iterations = 0

    for iteration in range(1, settings.max_iterations + 1):
        J = problem.evaluate_jacobian(v)
        g = J.T @ r
        if _projected_gradient_norm(problem, v, g) < settings.grad_tol:
            termination = TerminationReason.CONVERGED
            break

        # Hold variables sitting on a bound whose gradient pushes outward
        held = ((v <= problem.lower) & (g > 0)) | ((v >= problem.upper) & (g < 0))
        free = ~held
        Jf = J[:, free]
        delta = np.zeros_like(v)

        delta[free] = np.linalg.lstsq(Jf, -r, rcond=None)[0]
        trial = problem.clamp(v + delta)
        r_trial = problem.evaluate(trial)
        f_trial = 0.5 * float(r_trial @ r_trial)
        accepted = f_trial < f

        if not accepted:
            A = Jf.T @ Jf
            gf = g[free]
            eye = np.eye(A.shape[0])
            while damping <= DAMPING_MAX:
                delta[free] = np.linalg.solve(A + damping * eye, -gf)
                trial = problem.clamp(v + delta)
                r_trial = problem.evaluate(trial)
                f_trial = 0.5 * float(r_trial @ r_trial)
                if f_trial < f:
                    accepted = True
                    break
                damping *= 10.0

        if not accepted:
            termination = TerminationReason.STEP_TOO_SMALL
            logger.debug(f"Iteration {iteration}: no cost-reducing step, damping {damping:.1e}")
            break

        damping = max(damping / 10.0, DAMPING_MIN)
        step_norm = float(np.linalg.norm(trial - v))
        v, r, f = trial, r_trial, f_trial
        history.append(f)
        iterations = iteration
        logger.debug(f"Iteration {iteration}: cost {f:.6e}, step {step_norm:.3e}")

        if step_norm < settings.step_tol:
            termination = TerminationReason.STEP_TOO_SMALL
            break

    return SolveReport(
        solution=v,
        cost=f,
        iterations=iterations,
        termination=termination,
        wall_time=time.perf_counter() - started,
        cost_history=history,
    )
