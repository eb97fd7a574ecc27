"""
Cross-field validation of run configurations.

Field-level constraints are enforced by the Pydantic models; the checks here
relate several fields (sample count against horizons, trajectory ranges).
"""

import math
from typing import List, Tuple

from ..config import RunConfig
from ..models import ValidationResult

LARGE_NOISE_WARNING = 0.1   # rad


def validate_run_config(config: RunConfig, check_sweep: bool = False) -> ValidationResult:
    """
    Validate a run configuration before an experiment starts.

    Args:
        config: Effective configuration
        check_sweep: Also validate the horizon list of a sweep

    Returns:
        ValidationResult with errors and warnings
    """
    errors = []
    warnings = []

    estimator_errors, estimator_warnings = _validate_estimator(config)
    errors.extend(estimator_errors)
    warnings.extend(estimator_warnings)

    trajectory_errors, trajectory_warnings = _validate_trajectory(config)
    errors.extend(trajectory_errors)
    warnings.extend(trajectory_warnings)

    if check_sweep:
        errors.extend(_validate_horizons(config))

    return ValidationResult(is_valid=len(errors) == 0, errors=errors, warnings=warnings)


def _validate_estimator(config: RunConfig) -> Tuple[List[str], List[str]]:
    errors = []
    warnings = []
    cfg = config.estimator

    if config.samples <= cfg.horizon:
        errors.append(f"samples ({config.samples}) must exceed the horizon ({cfg.horizon})")
    if cfg.theta_min < 0:
        warnings.append("theta_min below 0 admits mirrored shapes")
    if cfg.theta_max > math.pi / 2:
        warnings.append("theta_max above pi/2 leaves the principal measurement range")
    if cfg.kinematic_weight == 0:
        warnings.append("kinematic_weight is 0; tip position is not anchored to the shape angles")

    for noise in [config.noise, *config.scenarios]:
        if max(abs(noise.sigma_beta), abs(noise.sigma_gamma)) > LARGE_NOISE_WARNING:
            warnings.append(f"noise level {noise.model_dump()} exceeds {LARGE_NOISE_WARNING} rad")

    return errors, warnings


def _validate_trajectory(config: RunConfig) -> Tuple[List[str], List[str]]:
    errors = []
    warnings = []
    spec = config.trajectory
    duration = config.samples * config.estimator.dt

    if spec.mode == "violating" and spec.violation_time >= duration:
        warnings.append(f"violation_time {spec.violation_time}s is after the last sample ({duration:.2f}s)")
    if spec.mode == "feasible" and spec.frequency * duration < 1.0:
        warnings.append("trajectory covers less than one period")

    return errors, warnings


def _validate_horizons(config: RunConfig) -> List[str]:
    errors = []
    if not config.horizons:
        errors.append("horizon list is empty")
    for N in config.horizons:
        if N < 1:
            errors.append(f"horizon {N} must be at least 1")
        elif N >= config.samples:
            errors.append(f"horizon {N} must be below the sample count {config.samples}")
    return errors
