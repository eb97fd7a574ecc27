"""
Configuration management for the continuum-robot MHE system.

Uses Pydantic settings for type-safe configuration with environment variable
support. Effective configs are layered: built-in defaults, then a config
document, then command-line overrides.
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .models import NoiseLevels, SolverSettings, TrajectorySpec

# Default Monte Carlo noise levels (sigma_beta, sigma_gamma); signs are discarded downstream
NOISE_SCENARIOS = [
    (0.022, -0.024),
    (0.028, 0.033),
    (-0.026, 0.032),
    (0.029, -0.001),
    (0.010, 0.021),
    (-0.028, -0.025),
    (-0.015, -0.005),
    (0.003, 0.029),
    (0.032, 0.020),
    (0.033, 0.032),
]


def _positive_diagonal(values: List[float], size: int, name: str) -> List[float]:
    if len(values) != size:
        raise ValueError(f"{name} must have {size} entries, got {len(values)}")
    if any(not math.isfinite(v) or v <= 0 for v in values):
        raise ValueError(f"{name} entries must be finite and positive")
    return values


class EkfSettings(BaseModel):
    """Extended Kalman filter tuning (diagonals of P0, Q and R)."""

    p0_diag: List[float] = Field(default_factory=lambda: [1e-2] * 5)
    q_diag: List[float] = Field(default_factory=lambda: [1e-4] * 5)
    r_diag: List[float] = Field(default_factory=lambda: [1e-3] * 2)

    @field_validator("p0_diag", "q_diag")
    @classmethod
    def _five(cls, v: List[float], info) -> List[float]:
        return _positive_diagonal(v, 5, info.field_name)

    @field_validator("r_diag")
    @classmethod
    def _two(cls, v: List[float], info) -> List[float]:
        return _positive_diagonal(v, 2, info.field_name)

    @property
    def P0(self) -> np.ndarray:
        return np.diag(self.p0_diag)

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.q_diag)

    @property
    def R(self) -> np.ndarray:
        return np.diag(self.r_diag)


class EstimatorConfig(BaseModel):
    """Robot geometry, horizon, weights, bounds and solver/EKF tuning."""

    robot_length: float = Field(default=1.0, gt=0)
    dt: float = Field(default=0.05, gt=0)
    horizon: int = Field(default=30, ge=1)

    # Cost weights: V on (gamma, beta) residuals, W on the 5 process residuals
    v_diag: List[float] = Field(default_factory=lambda: [2.0, 2.0])
    w_diag: List[float] = Field(default_factory=lambda: [10.0] * 5)
    measurement_residual_degrees: bool = True
    kinematic_weight: float = Field(default=1e4, ge=0)

    # Workspace box; position bounds are +/- robot_length
    theta_min: float = 0.0
    theta_max: float = math.pi / 2
    phi_min: float = -math.pi
    phi_max: float = math.pi

    input_filter_window: int = Field(default=1, ge=1)
    use_known_inputs: bool = False
    srmse_components: Literal["full", "position"] = "full"

    solver: SolverSettings = Field(default_factory=SolverSettings)
    ekf: EkfSettings = Field(default_factory=EkfSettings)

    @field_validator("v_diag")
    @classmethod
    def _v(cls, v: List[float]) -> List[float]:
        return _positive_diagonal(v, 2, "v_diag")

    @field_validator("w_diag")
    @classmethod
    def _w(cls, v: List[float]) -> List[float]:
        return _positive_diagonal(v, 5, "w_diag")

    @model_validator(mode="after")
    def _bounds_ordered(self) -> "EstimatorConfig":
        if self.theta_min > self.theta_max:
            raise ValueError("theta_min must not exceed theta_max")
        if self.phi_min > self.phi_max:
            raise ValueError("phi_min must not exceed phi_max")
        return self

    @property
    def lower_bounds(self) -> np.ndarray:
        s = self.robot_length
        return np.array([-s, -s, -s, self.theta_min, self.phi_min])

    @property
    def upper_bounds(self) -> np.ndarray:
        s = self.robot_length
        return np.array([s, s, s, self.theta_max, self.phi_max])


class RunConfig(BaseSettings):
    """Comprehensive configuration for data generation and experiments."""

    estimator: EstimatorConfig = Field(default_factory=EstimatorConfig)
    trajectory: TrajectorySpec = Field(default_factory=TrajectorySpec)
    samples: int = Field(default=200, ge=1)
    noise: NoiseLevels = Field(default_factory=lambda: NoiseLevels(sigma_beta=0.01, sigma_gamma=0.01))
    scenarios: List[NoiseLevels] = Field(
        default_factory=lambda: [NoiseLevels(sigma_beta=b, sigma_gamma=g) for b, g in NOISE_SCENARIOS]
    )
    horizons: List[int] = Field(default_factory=lambda: [10, 20, 30, 40, 50, 60])
    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)

    # Logging
    log_level: str = "INFO"
    log_file: str = "cmhe.log"

    model_config = SettingsConfigDict(
        env_prefix="CMHE_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
    )


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def read_config_document(path: Path) -> Dict[str, Any]:
    """
    Read a config document (JSON; YAML is accepted too).

    Args:
        path: Path to the document

    Returns:
        Parsed mapping (empty for an empty file)
    """
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"Config document {path} must contain a mapping")
    return data


def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build the effective config: defaults, then the document at ``path``, then ``overrides``.

    Args:
        path: Optional config document
        overrides: Nested mapping of command-line overrides

    Returns:
        Validated RunConfig
    """
    data: Dict[str, Any] = {}
    if path is not None:
        data = read_config_document(Path(path))
    if overrides:
        data = _deep_merge(data, overrides)
    return RunConfig(**data)
