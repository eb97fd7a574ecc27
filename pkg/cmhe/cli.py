#!/usr/bin/env python3
"""
CLI interface for the continuum-robot MHE toolkit.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
import numpy as np
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from .config import RunConfig, load_config
from .ekf import run_filter
from .errors import DataValidationError, EstimationError, NumericFailureError
from .experiments import (
    NOISE_INTERPRETATION,
    TIMING_COLUMNS,
    add_noise,
    generate_trajectory,
    monte_carlo_summary,
    run_horizon_sweep,
    run_monte_carlo,
    srmse,
)
from .mhe import run_sliding
from .utils.file_utils import (
    ensure_output_dir,
    load_measurement_log,
    load_state_table,
    state_frame,
    write_measurement_log,
    write_result_document,
    write_table,
)
from .utils.validator import validate_run_config

EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

logger = logging.getLogger(__name__)
console = Console()
err_console = Console(stderr=True)


def setup_logging(level: str, out_dir: Optional[Path] = None, log_file: str = "cmhe.log") -> None:
    """Configure root logging once per command: stderr plus a log file in the output directory."""
    handlers = [logging.StreamHandler()]
    if out_dir is not None:
        handlers.append(logging.FileHandler(ensure_output_dir(out_dir) / log_file))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


COMMON_OPTIONS = [
    click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='Path to a JSON config document'),
    click.option('--out', 'out_dir', type=click.Path(file_okay=False), default='results', show_default=True,
                 help='Output directory'),
    click.option('--seed', type=click.IntRange(0, 2**64 - 1), help='Master seed (overrides the config)'),
    click.option('--verbose', '-v', is_flag=True, help='Enable debug logging'),
]


def common_options(func):
    """Options shared by every subcommand."""
    for option in reversed(COMMON_OPTIONS):
        func = option(func)
    return func


def handle_errors(func):
    """Map library errors to exit codes: 1 validation, 2 numeric failure, 3 I/O."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except NumericFailureError as e:
            err_console.print(f"[red]Numeric failure:[/red] {e}")
            logger.debug("Numeric failure", exc_info=True)
            sys.exit(EXIT_NUMERIC)
        except OSError as e:
            err_console.print(f"[red]I/O error:[/red] {e}")
            sys.exit(EXIT_IO)
        except (EstimationError, ValidationError, ValueError, yaml.YAMLError) as e:
            err_console.print(f"[red]Invalid input:[/red] {e}")
            sys.exit(EXIT_VALIDATION)
    return wrapper


def _prepare(config_path: Optional[str], out_dir: str, seed: Optional[int], verbose: bool,
             overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    overrides = dict(overrides or {})
    if seed is not None:
        overrides['seed'] = seed
    config = load_config(Path(config_path) if config_path else None, overrides)
    setup_logging('DEBUG' if verbose else config.log_level, Path(out_dir), config.log_file)
    logger.info(f"Effective config: {config.model_dump(mode='json')}")
    return config


def _base_document(config: RunConfig, command: str) -> Dict[str, Any]:
    return {
        'command': command,
        'config': config.model_dump(mode='json'),
        'seed': config.seed,
    }


def _require_valid(config: RunConfig, check_sweep: bool = False) -> None:
    validation = validate_run_config(config, check_sweep=check_sweep)
    for warning in validation.warnings:
        err_console.print(f"[yellow]Warning:[/yellow] {warning}")
    if not validation.is_valid:
        raise DataValidationError("; ".join(validation.errors))


@click.group()
@click.version_option(package_name='cmhe')
def cli():
    """Constrained moving horizon estimation for continuum robots."""


@cli.command()
@common_options
@click.option('--degrees', is_flag=True, help='Write measurement logs in degrees')
@handle_errors
def generate(config_path, out_dir, seed, verbose, degrees):
    """Generate a synthetic trajectory with clean and noisy measurement logs."""
    config = _prepare(config_path, out_dir, seed, verbose)
    cfg = config.estimator
    out = ensure_output_dir(out_dir)

    with console.status("[bold green]Generating trajectory...", spinner="dots"):
        trajectory = generate_trajectory(config.trajectory, config.samples, cfg.dt, cfg.robot_length)
        noisy = add_noise(trajectory.measurements, config.noise.sigma_beta, config.noise.sigma_gamma, config.seed)

    write_table(out / 'truth.csv', state_frame(trajectory.times, {'': trajectory.states}))
    write_table(out / 'inputs.csv', {'theta_dot': trajectory.inputs[:, 0], 'phi_dot': trajectory.inputs[:, 1]})
    write_measurement_log(out / 'clean.csv', trajectory.times, trajectory.measurements, degrees)
    write_measurement_log(out / 'noisy.csv', trajectory.times, noisy, degrees)

    document = _base_document(config, 'generate')
    document['files'] = ['truth.csv', 'inputs.csv', 'clean.csv', 'noisy.csv']
    document['noise_interpretation'] = NOISE_INTERPRETATION
    document['angle_unit'] = 'deg' if degrees else 'rad'
    document['summary'] = {
        'samples': trajectory.samples,
        'theta_min': float(np.min(trajectory.states[:, 3])),
        'theta_max': float(np.max(trajectory.states[:, 3])),
    }
    write_result_document(out / 'generate.json', document)

    table = Table(title="Generated Data")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    table.add_row("Mode", config.trajectory.mode)
    table.add_row("Samples", str(trajectory.samples))
    table.add_row("Theta range", f"{document['summary']['theta_min']:.4f} .. {document['summary']['theta_max']:.4f}")
    table.add_row("Output", str(out))
    console.print(table)
    console.print("[green]✓ Data generated[/green]")


@cli.command()
@click.argument('log_path', type=click.Path(dir_okay=False))
@common_options
@click.option('--estimator', type=click.Choice(['mhe', 'ekf', 'both']), default='both', show_default=True,
              help='Estimator(s) to run')
@click.option('--truth', 'truth_path', type=click.Path(dir_okay=False), help='Truth table to score against')
@click.option('--degrees', is_flag=True, help='Measurement log is in degrees')
@handle_errors
def estimate(log_path, config_path, out_dir, seed, verbose, estimator, truth_path, degrees):
    """Run the estimator(s) on a measurement log."""
    config = _prepare(config_path, out_dir, seed, verbose)
    out = ensure_output_dir(out_dir)
    log = load_measurement_log(log_path, degrees=degrees)
    cfg = config.estimator
    if log.dt is not None:
        cfg = cfg.model_copy(update={'dt': log.dt})

    M, N = len(log), cfg.horizon
    run_mhe = estimator in ('mhe', 'both')
    run_ekf = estimator in ('ekf', 'both')
    if run_mhe and M <= N:
        raise DataValidationError(f"MHE needs more samples than the horizon: M={M}, N={N}")

    series: Dict[str, np.ndarray] = {}
    timing: Dict[str, Any] = {}
    with console.status("[bold green]Estimating...", spinner="dots"):
        if run_mhe:
            mhe = run_sliding(log.measurements, cfg)
            series['mhe'] = mhe.estimates
            timing['mhe_solve_times'] = mhe.solve_times
        if run_ekf:
            ekf = run_filter(log.measurements, cfg)
            series['ekf'] = ekf.estimates
            timing['ekf_time'] = ekf.wall_time

    start, stop = (N - 1, M - 1) if run_mhe else (0, M)
    metrics: Dict[str, Any] = {'range': [start, stop]}
    if truth_path:
        truth = load_state_table(truth_path)
        if truth.shape[0] != M:
            raise DataValidationError(f"truth table has {truth.shape[0]} rows, log has {M}")
        for name, values in series.items():
            metrics[f'srmse_{name}'] = srmse(truth, values, start, stop, cfg.srmse_components)

    write_table(out / 'estimates.csv', state_frame(log.times, series))
    document = _base_document(config, 'estimate')
    document.update({
        'log': str(log_path),
        'dt': cfg.dt,
        'estimator': estimator,
        'metrics': metrics,
        'series': {'t': log.times, **series},
        'timing': timing,
    })
    write_result_document(out / 'estimate.json', document)

    table = Table(title="Estimation Results")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    table.add_row("Samples", str(M))
    table.add_row("Scored range", f"{start} .. {stop - 1}")
    for key, value in metrics.items():
        if key.startswith('srmse'):
            table.add_row(key.upper(), f"{value:.6f}")
    if run_mhe:
        table.add_row("MHE mean solve time", f"{np.mean(timing['mhe_solve_times']) * 1e3:.2f} ms")
    console.print(table)
    console.print("[green]✓ Estimation complete[/green]")


@cli.command()
@common_options
@click.option('--workers', type=int, help='Worker processes (overrides the config)')
@handle_errors
def montecarlo(config_path, out_dir, seed, verbose, workers):
    """Compare MHE and EKF over the configured noise scenarios."""
    overrides = {'workers': workers} if workers else None
    config = _prepare(config_path, out_dir, seed, verbose, overrides)
    _require_valid(config)
    out = ensure_output_dir(out_dir)

    with console.status("[bold green]Running Monte Carlo scenarios...", spinner="dots"):
        results = run_monte_carlo(config)
    summary = monte_carlo_summary(results)

    write_table(out / 'montecarlo.csv', results)
    timing_columns = [c for c in TIMING_COLUMNS if c in results.columns]
    document = _base_document(config, 'montecarlo')
    document['summary'] = summary
    document['rows'] = results.drop(columns=timing_columns).to_dict(orient='records')
    document['timing'] = results[['scenario', *timing_columns]].to_dict(orient='records')
    write_result_document(out / 'montecarlo.json', document)

    table = Table(title="Monte Carlo SRMSE")
    for column in ("Scenario", "sigma_beta", "sigma_gamma", "MHE", "EKF", "Status"):
        table.add_column(column, style="cyan" if column == "Scenario" else "magenta")
    for row in results.to_dict(orient='records'):
        table.add_row(
            str(row['scenario']), f"{row['sigma_beta']:+.3f}", f"{row['sigma_gamma']:+.3f}",
            f"{row['srmse_mhe']:.4f}", f"{row['srmse_ekf']:.4f}", row['status'],
        )
    console.print(table)
    console.print(f"MHE better in {summary['mhe_wins']}/{summary['scenarios']} scenarios; "
                  f"SRMSE std ratio MHE/EKF {summary['dispersion_ratio']:.3f}")


@cli.command('horizon-sweep')
@common_options
@click.option('--horizons', help='Comma-separated horizon lengths (overrides the config)')
@click.option('--noisy', is_flag=True, help='Add the configured noise to the measurements')
@handle_errors
def horizon_sweep(config_path, out_dir, seed, verbose, horizons, noisy):
    """Run MHE for several horizon lengths on one trajectory."""
    overrides = None
    if horizons is not None:
        try:
            overrides = {'horizons': [int(n) for n in horizons.split(',') if n.strip()]}
        except ValueError as e:
            raise DataValidationError(f"invalid horizon list: {horizons}") from e
    config = _prepare(config_path, out_dir, seed, verbose, overrides)
    _require_valid(config, check_sweep=True)
    out = ensure_output_dir(out_dir)

    with console.status("[bold green]Sweeping horizons...", spinner="dots"):
        results = run_horizon_sweep(config.horizons, config, config.noise if noisy else None)

    write_table(out / 'horizon_sweep.csv', results)
    timing_columns = [c for c in TIMING_COLUMNS if c in results.columns]
    document = _base_document(config, 'horizon-sweep')
    document['noisy'] = noisy
    document['rows'] = results.drop(columns=timing_columns).to_dict(orient='records')
    document['timing'] = results[['N', *timing_columns]].to_dict(orient='records')
    write_result_document(out / 'horizon_sweep.json', document)

    table = Table(title="Horizon Sweep")
    for column in ("N", "SRMSE", "Mean solve (ms)", "Total (s)", "Solves"):
        table.add_column(column, style="cyan" if column == "N" else "magenta")
    for row in results.to_dict(orient='records'):
        table.add_row(str(row['N']), f"{row['srmse']:.6f}", f"{row['mean_solve_time'] * 1e3:.2f}",
                      f"{row['total_time']:.2f}", str(row['solve_count']))
    console.print(table)


if __name__ == "__main__":
    cli()
