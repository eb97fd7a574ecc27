"""
Data models for the continuum-robot estimation system.

Small value types used on the numeric hot path (shapes, states, measurements,
inputs) are frozen dataclasses; reports, settings and experiment descriptions
are Pydantic models so they validate and serialise alongside the config.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# 3x3 direction-cosine matrix
Rotation3 = np.ndarray


@dataclass(frozen=True)
class ShapeParams:
    """Constant-curvature arc: bend angle theta, bend-plane angle phi, arc length s."""

    theta: float
    phi: float
    s: float = 1.0


@dataclass(frozen=True)
class Measurement:
    """IMU roll/pitch pair in radians."""

    gamma: float
    beta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma, self.beta], dtype=float)


@dataclass(frozen=True)
class VelocityInput:
    """Shape-parameter rates in radians per second."""

    theta_dot: float
    phi_dot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_dot, self.phi_dot], dtype=float)


@dataclass(frozen=True)
class RobotState:
    """Estimated state: tip position (meters) and shape angles (radians)."""

    x: float
    y: float
    z: float
    theta: float
    phi: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def shape(self, s: float) -> ShapeParams:
        return ShapeParams(theta=self.theta, phi=self.phi, s=s)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.theta, self.phi], dtype=float)

    @classmethod
    def from_array(cls, vector: np.ndarray) -> "RobotState":
        x, y, z, theta, phi = (float(v) for v in np.asarray(vector, dtype=float).reshape(5))
        return cls(x=x, y=y, z=z, theta=theta, phi=phi)


class TerminationReason(str, Enum):
    """Why the least-squares solver stopped."""

    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    STEP_TOO_SMALL = "step-too-small"


class SolverSettings(BaseModel):
    """Projected Levenberg-Marquardt settings."""

    max_iterations: int = Field(default=100, gt=0)
    grad_tol: float = Field(default=1e-8, gt=0)
    step_tol: float = Field(default=1e-12, gt=0)
    damping_init: float = Field(default=1e-3, gt=0)


class SolveReport(BaseModel):
    """Outcome of a single box-constrained least-squares solve."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    solution: np.ndarray
    cost: float = Field(ge=0.0)
    iterations: int = 0
    termination: TerminationReason
    wall_time: float = 0.0
    cost_history: List[float] = Field(default_factory=list)


class NoiseLevels(BaseModel):
    """Per-angle noise levels; the sign is discarded and |value| is the std-dev in radians."""

    sigma_beta: float = 0.0
    sigma_gamma: float = 0.0

    @model_validator(mode="after")
    def _finite(self) -> "NoiseLevels":
        if not (math.isfinite(self.sigma_beta) and math.isfinite(self.sigma_gamma)):
            raise ValueError("noise levels must be finite")
        return self


class TrajectorySpec(BaseModel):
    """
    Angle profiles for synthetic data.

    ``feasible`` samples sinusoidal roll/pitch profiles inside the workspace,
    ``violating`` ramps theta in a fixed bend plane past theta_max after
    ``violation_time`` seconds, and ``constant`` holds (gamma, beta) fixed.
    """

    mode: Literal["feasible", "violating", "constant"] = "feasible"

    # feasible / constant
    gamma_center: float = math.pi / 8
    gamma_amplitude: float = math.pi / 10
    beta_center: float = math.pi / 4
    beta_amplitude: float = math.pi / 6
    frequency: float = Field(default=0.1, ge=0.0)
    phase: float = math.pi / 4

    # violating
    theta_start: float = Field(default=0.2, ge=0.0)
    violation_time: float = Field(default=6.0, gt=0.0)
    bend_plane: float = math.pi / 2


class ValidationResult(BaseModel):
    """Result of config or data validation."""

    is_valid: bool
    errors: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
