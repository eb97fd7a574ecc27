"""
Synthetic data, noise injection, error metrics and the experiment protocols.

Protocols: noiseless tracking, constraint saturation on a trajectory that
leaves the workspace, Monte Carlo over noise scenarios comparing MHE with the
EKF, and a horizon-length sweep.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .config import EstimatorConfig, RunConfig
from .ekf import EkfResult, run_filter
from .errors import DataValidationError, EstimationError, InvalidArgumentError
from .kinematics import invert, measurement, tip_position
from .mhe import SlidingResult, run_sliding
from .models import NoiseLevels, TrajectorySpec
from .utils.file_utils import load_measurement_log  # noqa: F401  (re-exported)
from .utils.numerics import wrap_angle

logger = logging.getLogger(__name__)

NOISE_INTERPRETATION = "|sigma| is the Gaussian standard deviation in radians; signs are discarded"
FEASIBLE_GAMMA = (0.0, np.pi / 4)
FEASIBLE_BETA = (0.0, np.pi / 2)
TIMING_COLUMNS = ["mhe_mean_solve_time", "mhe_total_time", "ekf_time", "mean_solve_time", "total_time"]

SeedLike = Union[int, Sequence[int]]


@dataclass
class Trajectory:
    """Sampled ground truth: times, states (M, 5), clean measurements (M, 2), inputs (M-1, 2)."""

    times: np.ndarray
    states: np.ndarray
    measurements: np.ndarray
    inputs: np.ndarray

    @property
    def samples(self) -> int:
        return self.times.shape[0]


@dataclass
class Scenario:
    """One experiment run: trajectory profile, noise levels, seed and estimator settings."""

    trajectory: TrajectorySpec
    noise: NoiseLevels
    seed: SeedLike
    samples: int
    estimator: EstimatorConfig

    def __post_init__(self):
        if self.samples <= self.estimator.horizon:
            raise InvalidArgumentError(
                f"scenario needs more samples than the horizon: M={self.samples}, N={self.estimator.horizon}"
            )


@dataclass
class ScenarioResult:
    """Aligned truth and estimates of one scenario with scores and timing."""

    truth: Trajectory
    measurements: np.ndarray
    mhe: SlidingResult
    ekf: Optional[EkfResult]
    srmse_mhe: float
    srmse_ekf: Optional[float]
    start: int
    stop: int
    extras: Dict[str, Any] = field(default_factory=dict)

    def to_document(self) -> Dict[str, Any]:
        """Metrics and per-sample series; timing goes under its own key."""
        series = {
            "t": self.truth.times,
            "truth": self.truth.states,
            "measurements": self.measurements,
            "mhe": self.mhe.estimates,
        }
        metrics = {"srmse_mhe": self.srmse_mhe, "range": [self.start, self.stop]}
        timing = {"mhe_solve_times": self.mhe.solve_times}
        if self.ekf is not None:
            series["ekf"] = self.ekf.estimates
            metrics["srmse_ekf"] = self.srmse_ekf
            timing["ekf_time"] = self.ekf.wall_time
        metrics.update(self.extras)
        return {"metrics": metrics, "series": series, "timing": timing}


def _check_feasible(spec: TrajectorySpec) -> None:
    g_lo = spec.gamma_center - abs(spec.gamma_amplitude)
    g_hi = spec.gamma_center + abs(spec.gamma_amplitude)
    b_lo = spec.beta_center - abs(spec.beta_amplitude)
    b_hi = spec.beta_center + abs(spec.beta_amplitude)
    if g_lo < FEASIBLE_GAMMA[0] or g_hi > FEASIBLE_GAMMA[1]:
        raise InvalidArgumentError(f"gamma range [{g_lo:.4f}, {g_hi:.4f}] leaves [0, pi/4]")
    if b_lo < FEASIBLE_BETA[0] or b_hi > FEASIBLE_BETA[1]:
        raise InvalidArgumentError(f"beta range [{b_lo:.4f}, {b_hi:.4f}] leaves [0, pi/2]")


def generate_trajectory(spec: TrajectorySpec, samples: int, dt: float, s: float = 1.0) -> Trajectory:
    """
    Sample a ground-truth trajectory.

    ``feasible`` and ``constant`` profiles are defined in (gamma, beta) and
    inverted to shape angles; ``violating`` ramps theta in a fixed plane and
    crosses pi/2 at ``violation_time``.

    Raises:
        InvalidArgumentError: On a feasible profile outside the workspace ranges
            or non-positive sizes
    """
    if samples < 1:
        raise InvalidArgumentError(f"need at least one sample, got {samples}")
    if not dt > 0:
        raise InvalidArgumentError(f"sample time must be positive, got {dt!r}")

    times = np.arange(samples) * dt
    if spec.mode == "violating":
        theta = spec.theta_start + (np.pi / 2 - spec.theta_start) * times / spec.violation_time
        phi = np.full(samples, spec.bend_plane)
    else:
        if spec.mode == "feasible":
            _check_feasible(spec)
            wave = 2 * np.pi * spec.frequency * times
            gamma = spec.gamma_center + spec.gamma_amplitude * np.sin(wave)
            beta = spec.beta_center + spec.beta_amplitude * np.sin(wave + spec.phase)
        else:
            gamma = np.full(samples, spec.gamma_center)
            beta = np.full(samples, spec.beta_center)
        theta, phi = invert(gamma, beta)

    states = np.column_stack([tip_position(theta, phi, s), theta, phi])
    clean = measurement(theta, phi)
    if samples > 1:
        inputs = np.column_stack([np.diff(theta) / dt, wrap_angle(np.diff(phi)) / dt])
    else:
        inputs = np.zeros((0, 2))

    logger.debug(f"Generated {spec.mode} trajectory with {samples} samples")
    return Trajectory(times=times, states=states, measurements=clean, inputs=inputs)


def add_noise(measurements, sigma_beta: float, sigma_gamma: float, seed: SeedLike) -> np.ndarray:
    """
    Add zero-mean Gaussian noise with std |sigma_gamma| to gamma and |sigma_beta| to beta.

    Raises:
        InvalidArgumentError: On non-finite noise levels
    """
    if not (np.isfinite(sigma_beta) and np.isfinite(sigma_gamma)):
        raise InvalidArgumentError("noise levels must be finite")
    z = np.asarray(measurements, dtype=float).reshape(-1, 2)
    rng = np.random.default_rng(seed)
    scale = np.array([abs(sigma_gamma), abs(sigma_beta)])
    return z + rng.standard_normal(z.shape) * scale


def srmse(truth, estimates, start: int = 0, stop: Optional[int] = None, components: str = "full") -> float:
    """
    Sum over state components of the root-mean-square error on ``[start, stop)``.

    Args:
        truth: Array (M, 5)
        estimates: Array (M, 5)
        start: First sample scored
        stop: One past the last sample scored (default M)
        components: ``full`` for all five components, ``position`` for x, y, z

    Raises:
        InvalidArgumentError: On mismatched shapes, an empty range or missing estimates in range
    """
    truth = np.asarray(truth, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if truth.shape != estimates.shape:
        raise InvalidArgumentError(f"series shapes differ: {truth.shape} vs {estimates.shape}")
    stop = truth.shape[0] if stop is None else stop
    if not 0 <= start < stop <= truth.shape[0]:
        raise InvalidArgumentError(f"invalid scoring range [{start}, {stop}) for {truth.shape[0]} samples")

    width = 3 if components == "position" else truth.shape[1]
    error = estimates[start:stop, :width] - truth[start:stop, :width]
    if width == 5:
        error[:, 4] = wrap_angle(error[:, 4])
    if not np.all(np.isfinite(error)):
        raise InvalidArgumentError("estimates missing inside the scoring range")
    return float(np.sum(np.sqrt(np.mean(error**2, axis=0))))


def run_scenario(scenario: Scenario, with_ekf: bool = True) -> ScenarioResult:
    """
    Run MHE (and the EKF) on one noisy realisation of a trajectory.

    Both estimators see the same noisy measurements and are scored on the
    samples the MHE estimates, N-1 .. M-2.
    """
    cfg = scenario.estimator
    truth = generate_trajectory(scenario.trajectory, scenario.samples, cfg.dt, cfg.robot_length)
    noisy = add_noise(truth.measurements, scenario.noise.sigma_beta, scenario.noise.sigma_gamma, scenario.seed)
    inputs = truth.inputs if cfg.use_known_inputs else None

    mhe = run_sliding(noisy, cfg, inputs)
    start, stop = cfg.horizon - 1, scenario.samples - 1
    score_mhe = srmse(truth.states, mhe.estimates, start, stop, cfg.srmse_components)

    ekf, score_ekf = None, None
    if with_ekf:
        ekf = run_filter(noisy, cfg, inputs)
        score_ekf = srmse(truth.states, ekf.estimates, start, stop, cfg.srmse_components)

    return ScenarioResult(
        truth=truth,
        measurements=noisy,
        mhe=mhe,
        ekf=ekf,
        srmse_mhe=score_mhe,
        srmse_ekf=score_ekf,
        start=start,
        stop=stop,
    )


def tracking_errors(result: ScenarioResult) -> Dict[str, float]:
    """Largest per-sample position and shape-angle errors of the MHE on its scored range."""
    window = slice(result.start, result.stop)
    error = result.mhe.estimates[window] - result.truth.states[window]
    error[:, 4] = wrap_angle(error[:, 4])
    return {
        "max_position_error": float(np.max(np.linalg.norm(error[:, :3], axis=1))),
        "max_shape_error": float(np.max(np.abs(error[:, 3:5]))),
    }


def run_noiseless_tracking(config: RunConfig) -> ScenarioResult:
    """Feasible trajectory without noise; reports the worst tracking errors."""
    scenario = Scenario(
        trajectory=config.trajectory.model_copy(update={"mode": "feasible"}),
        noise=NoiseLevels(),
        seed=config.seed,
        samples=config.samples,
        estimator=config.estimator,
    )
    result = run_scenario(scenario)
    result.extras.update(tracking_errors(result))
    logger.info(
        f"Noiseless tracking: SRMSE {result.srmse_mhe:.3e}, "
        f"max position error {result.extras['max_position_error']:.3e}"
    )
    return result


def run_constraint_saturation(config: RunConfig) -> ScenarioResult:
    """
    Violating trajectory without noise.

    Extras record the largest theta estimate of each estimator, the time the
    truth leaves the workspace and the largest gap between the MHE theta and
    its bound on the violating samples.
    """
    cfg = config.estimator
    scenario = Scenario(
        trajectory=config.trajectory.model_copy(update={"mode": "violating"}),
        noise=NoiseLevels(),
        seed=config.seed,
        samples=config.samples,
        estimator=cfg,
    )
    result = run_scenario(scenario)

    window = slice(result.start, result.stop)
    theta_truth = result.truth.states[window, 3]
    theta_mhe = result.mhe.estimates[window, 3]
    violating = theta_truth > cfg.theta_max
    crossing = np.flatnonzero(result.truth.states[:, 3] > cfg.theta_max)

    result.extras.update({
        "theta_max": cfg.theta_max,
        "max_theta_mhe": float(np.max(theta_mhe)),
        "max_theta_ekf": float(np.max(result.ekf.estimates[:, 3])),
        "violation_time": float(result.truth.times[crossing[0]]) if crossing.size else None,
        "violating_samples": int(np.count_nonzero(violating)),
        "max_saturation_gap": float(np.max(np.abs(theta_mhe[violating] - cfg.theta_max))) if violating.any() else None,
    })
    logger.info(
        f"Constraint saturation: max MHE theta {result.extras['max_theta_mhe']:.6f}, "
        f"max EKF theta {result.extras['max_theta_ekf']:.6f}"
    )
    return result


def _monte_carlo_row(args: Tuple[int, NoiseLevels, RunConfig]) -> Dict[str, Any]:
    index, noise, config = args
    row: Dict[str, Any] = {
        "scenario": index,
        "sigma_beta": noise.sigma_beta,
        "sigma_gamma": noise.sigma_gamma,
        "std_beta": abs(noise.sigma_beta),
        "std_gamma": abs(noise.sigma_gamma),
    }
    try:
        scenario = Scenario(
            trajectory=config.trajectory,
            noise=noise,
            seed=[config.seed, index],
            samples=config.samples,
            estimator=config.estimator,
        )
        result = run_scenario(scenario)
    except EstimationError as e:
        logger.warning(f"Scenario {index} failed: {e}")
        row.update({"status": "failed", "error": str(e), "srmse_mhe": np.nan, "srmse_ekf": np.nan,
                    "mhe_better": False, "mhe_mean_solve_time": np.nan, "mhe_total_time": np.nan,
                    "ekf_time": np.nan})
        return row

    row.update({
        "status": "ok",
        "error": "",
        "srmse_mhe": result.srmse_mhe,
        "srmse_ekf": result.srmse_ekf,
        "mhe_better": bool(result.srmse_mhe < result.srmse_ekf),
        "mhe_mean_solve_time": float(np.mean(result.mhe.solve_times)),
        "mhe_total_time": float(np.sum(result.mhe.solve_times)),
        "ekf_time": result.ekf.wall_time,
    })
    logger.info(f"Scenario {index}: SRMSE MHE {result.srmse_mhe:.4f}, EKF {result.srmse_ekf:.4f}")
    return row


def run_monte_carlo(config: RunConfig, scenarios: Optional[List[NoiseLevels]] = None) -> pd.DataFrame:
    """
    Run both estimators over a list of noise scenarios.

    Scenario ``i`` draws its noise from a generator seeded with
    ``(config.seed, i)``, so rows do not depend on ``config.workers``.
    Failed scenarios yield rows with status ``failed``.

    Returns:
        DataFrame with one row per scenario
    """
    scenarios = list(config.scenarios if scenarios is None else scenarios)
    if not scenarios:
        raise DataValidationError("no noise scenarios given")
    jobs = [(index, noise, config) for index, noise in enumerate(scenarios)]
    logger.info(f"Monte Carlo: {len(jobs)} scenarios, {config.workers} worker(s)")

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_monte_carlo_row, jobs))
    else:
        rows = [_monte_carlo_row(job) for job in jobs]
    return pd.DataFrame(rows)


def monte_carlo_summary(table: pd.DataFrame) -> Dict[str, Any]:
    """Win count and spread of both estimators' SRMSE across successful scenarios."""
    ok = table[table["status"] == "ok"]
    std_mhe = float(ok["srmse_mhe"].std(ddof=0)) if len(ok) else float("nan")
    std_ekf = float(ok["srmse_ekf"].std(ddof=0)) if len(ok) else float("nan")
    return {
        "scenarios": int(len(table)),
        "failed": int((table["status"] != "ok").sum()),
        "mhe_wins": int(ok["mhe_better"].sum()),
        "std_srmse_mhe": std_mhe,
        "std_srmse_ekf": std_ekf,
        "dispersion_ratio": std_mhe / std_ekf if std_ekf > 0 else float("nan"),
        "noise_interpretation": NOISE_INTERPRETATION,
    }


def run_horizon_sweep(
        horizons: Sequence[int],
        config: RunConfig,
        noise: Optional[NoiseLevels] = None
) -> pd.DataFrame:
    """
    MHE on one trajectory for each horizon length.

    Args:
        horizons: Horizon lengths N, each below the sample count
        config: Run configuration (trajectory, samples, estimator, seed)
        noise: Noise levels; clean measurements when omitted

    Returns:
        DataFrame with columns N, srmse, mean_solve_time, total_time, solve_count

    Raises:
        DataValidationError: On an empty list or any N >= M
    """
    horizons = list(horizons)
    M = config.samples
    if not horizons:
        raise DataValidationError("horizon list is empty")
    too_long = [N for N in horizons if N >= M]
    if too_long:
        raise DataValidationError(f"horizons {too_long} are not below the sample count {M}")

    cfg = config.estimator
    truth = generate_trajectory(config.trajectory, M, cfg.dt, cfg.robot_length)
    data = truth.measurements
    if noise is not None:
        data = add_noise(data, noise.sigma_beta, noise.sigma_gamma, config.seed)
    inputs = truth.inputs if cfg.use_known_inputs else None

    rows = []
    for N in horizons:
        cfg_n = cfg.model_copy(update={"horizon": N})
        started = time.perf_counter()
        result = run_sliding(data, cfg_n, inputs)
        total = time.perf_counter() - started
        score = srmse(truth.states, result.estimates, N - 1, M - 1, cfg.srmse_components)
        rows.append({
            "N": N,
            "srmse": score,
            "mean_solve_time": float(np.mean(result.solve_times)),
            "total_time": total,
            "solve_count": result.solve_count,
        })
        logger.info(f"Horizon {N}: SRMSE {score:.4e}, {result.solve_count} solves in {total:.2f}s")
    return pd.DataFrame(rows)
