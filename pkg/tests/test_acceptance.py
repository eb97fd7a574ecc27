"""
End-to-end experiment checks on the default configuration.

The full-size runs are marked ``slow``; deselect them with ``-m "not slow"``.
"""

import numpy as np
import pandas as pd
import pytest

from cmhe.config import RunConfig
from cmhe.experiments import (
    TIMING_COLUMNS,
    monte_carlo_summary,
    run_constraint_saturation,
    run_horizon_sweep,
    run_monte_carlo,
    run_noiseless_tracking,
)
from cmhe.utils.file_utils import read_result_document, strip_timing, write_result_document


@pytest.mark.slow
def test_noiseless_tracking():
    result = run_noiseless_tracking(RunConfig())
    assert result.mhe.solve_count == 170
    assert result.extras["max_position_error"] < 1e-3
    assert result.extras["max_shape_error"] < 1e-3


@pytest.mark.slow
def test_constraint_saturation():
    config = RunConfig()
    result = run_constraint_saturation(config)
    extras = result.extras
    theta_max = config.estimator.theta_max

    assert np.nanmax(result.mhe.estimates[:, 3]) <= theta_max
    assert extras["violating_samples"] > 0
    assert extras["max_saturation_gap"] <= 1e-6
    assert extras["max_theta_ekf"] > theta_max

    window = slice(result.start, result.stop)
    before = result.truth.states[window, 3] < theta_max
    error = result.mhe.estimates[window][before] - result.truth.states[window][before]
    assert np.max(np.linalg.norm(error[:, :3], axis=1)) < 1e-3
    assert np.max(np.abs(error[:, 3:])) < 1e-3


@pytest.mark.slow
def test_monte_carlo_ordering():
    table = run_monte_carlo(RunConfig())
    summary = monte_carlo_summary(table)

    assert summary["failed"] == 0
    assert summary["mhe_wins"] >= 8
    assert summary["dispersion_ratio"] < 0.5


@pytest.mark.slow
def test_horizon_sweep_structure():
    config = RunConfig()
    table = run_horizon_sweep([10, 20, 30, 40, 50, 60], config)

    assert table["solve_count"].tolist() == [190, 180, 170, 160, 150, 140]
    assert {"mean_solve_time", "total_time"} <= set(table.columns)
    scores = table["srmse"].to_numpy()
    assert scores.max() - scores.min() < 0.25 * scores.max() + 1e-4


def test_small_runs_are_deterministic(small_run_config, tmp_path):
    first = run_horizon_sweep(small_run_config.horizons, small_run_config)
    second = run_horizon_sweep(small_run_config.horizons, small_run_config)
    timing = [c for c in TIMING_COLUMNS if c in first.columns]
    pd.testing.assert_frame_equal(first.drop(columns=timing), second.drop(columns=timing))

    documents = []
    for name in ("a", "b"):
        table = run_monte_carlo(small_run_config)
        document = {"summary": monte_carlo_summary(table), "timing": table[["ekf_time"]].to_dict(orient="list")}
        write_result_document(tmp_path / f"{name}.json", document)
        documents.append(strip_timing(read_result_document(tmp_path / f"{name}.json")))
    assert documents[0] == documents[1]
