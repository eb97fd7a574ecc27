import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from cmhe.cli import EXIT_IO, EXIT_VALIDATION, cli
from cmhe.utils.file_utils import read_result_document, strip_timing

pytestmark = pytest.mark.usefixtures("restore_logging")


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    def write(document, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)

    return write


SMALL = {"samples": 60, "estimator": {"horizon": 10}}


def test_generate_writes_logs(runner, tmp_path, config_file):
    out = tmp_path / "gen"
    result = runner.invoke(cli, ["generate", "--config", config_file(SMALL), "--out", str(out), "--seed", "3"])
    assert result.exit_code == 0, result.output

    for name in ("truth.csv", "clean.csv", "noisy.csv"):
        assert len(pd.read_csv(out / name)) == 60
    assert len(pd.read_csv(out / "inputs.csv")) == 59
    assert list(pd.read_csv(out / "noisy.csv").columns) == ["t", "gamma", "beta"]

    document = read_result_document(out / "generate.json")
    assert document["seed"] == 3
    assert document["config"]["samples"] == 60


def test_generate_is_reproducible(runner, tmp_path, config_file):
    config = config_file(SMALL)
    for name in ("a", "b"):
        result = runner.invoke(cli, ["generate", "--config", config, "--out", str(tmp_path / name), "--seed", "9"])
        assert result.exit_code == 0, result.output

    for name in ("truth.csv", "noisy.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_violating_profile(runner, tmp_path, config_file):
    config = config_file({"samples": 200, "trajectory": {"mode": "violating"}})
    result = runner.invoke(cli, ["generate", "--config", config, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert read_result_document(tmp_path / "generate.json")["summary"]["theta_max"] > np.pi / 2


def test_estimate_both_with_truth(runner, tmp_path, config_file):
    config = config_file(SMALL)
    data = tmp_path / "data"
    assert runner.invoke(cli, ["generate", "--config", config, "--out", str(data)]).exit_code == 0

    out = tmp_path / "est"
    result = runner.invoke(cli, [
        "estimate", str(data / "noisy.csv"), "--config", config, "--out", str(out),
        "--truth", str(data / "truth.csv"),
    ])
    assert result.exit_code == 0, result.output

    document = read_result_document(out / "estimate.json")
    assert document["metrics"]["range"] == [9, 59]
    assert document["metrics"]["srmse_mhe"] >= 0
    assert document["metrics"]["srmse_ekf"] >= 0
    assert document["dt"] == pytest.approx(0.05)

    estimates = pd.read_csv(out / "estimates.csv")
    assert len(estimates) == 60
    assert {"mhe_theta", "ekf_theta"} <= set(estimates.columns)


def test_estimate_single_sample_with_ekf(runner, tmp_path):
    log = tmp_path / "one.csv"
    log.write_text("t,gamma,beta\n0.0,0.1,0.5\n")
    result = runner.invoke(cli, ["estimate", str(log), "--estimator", "ekf", "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output


def test_estimate_mhe_needs_more_samples_than_horizon(runner, tmp_path):
    log = tmp_path / "short.csv"
    log.write_text("t,gamma,beta\n0.0,0.1,0.5\n0.05,0.1,0.5\n")
    result = runner.invoke(cli, ["estimate", str(log), "--estimator", "mhe", "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_VALIDATION


def test_estimate_missing_log(runner, tmp_path):
    result = runner.invoke(cli, ["estimate", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_IO


def test_estimate_malformed_log(runner, tmp_path):
    log = tmp_path / "bad.csv"
    log.write_text("t,gamma,beta\n0.0,0.1,0.5\n0.05,oops,0.5\n")
    result = runner.invoke(cli, ["estimate", str(log), "--estimator", "ekf", "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_VALIDATION


def test_invalid_config_rejected(runner, tmp_path, config_file):
    config = config_file({"estimator": {"horizon": 0}})
    result = runner.invoke(cli, ["generate", "--config", config, "--out", str(tmp_path)])
    assert result.exit_code == EXIT_VALIDATION


def test_horizon_sweep_empty_list(runner, tmp_path, config_file):
    result = runner.invoke(cli, [
        "horizon-sweep", "--config", config_file({"samples": 40}), "--out", str(tmp_path), "--horizons", "",
    ])
    assert result.exit_code == EXIT_VALIDATION


def test_horizon_sweep_small(runner, tmp_path, config_file):
    result = runner.invoke(cli, [
        "horizon-sweep", "--config", config_file({"samples": 40}), "--out", str(tmp_path), "--horizons", "5,10",
    ])
    assert result.exit_code == 0, result.output

    table = pd.read_csv(tmp_path / "horizon_sweep.csv")
    assert table["N"].tolist() == [5, 10]
    assert table["solve_count"].tolist() == [35, 30]
    document = read_result_document(tmp_path / "horizon_sweep.json")
    assert "total_time" not in document["rows"][0]


def test_montecarlo_small(runner, tmp_path, config_file):
    config = config_file({
        "samples": 40,
        "estimator": {"horizon": 10},
        "scenarios": [{"sigma_beta": 0.022, "sigma_gamma": -0.024}, {"sigma_beta": 0.01, "sigma_gamma": 0.021}],
    })
    for name in ("a", "b"):
        result = runner.invoke(cli, ["montecarlo", "--config", config, "--out", str(tmp_path / name), "--seed", "1"])
        assert result.exit_code == 0, result.output

    first = read_result_document(tmp_path / "a" / "montecarlo.json")
    second = read_result_document(tmp_path / "b" / "montecarlo.json")
    assert len(first["rows"]) == 2
    assert first["summary"]["scenarios"] == 2
    assert strip_timing(first) == strip_timing(second)
