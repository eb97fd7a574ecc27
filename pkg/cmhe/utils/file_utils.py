"""
File I/O utilities for measurement logs, result tables and result documents.
"""

import io
import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..errors import DataValidationError, LogParseError

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["t", "gamma", "beta"]
STATE_COLUMNS = ["x", "y", "z", "theta", "phi"]
FLOAT_FORMAT = "%.17g"


@dataclass
class MeasurementLog:
    """Parsed measurement log: timestamps, (gamma, beta) rows and the inferred sample time."""

    times: np.ndarray
    measurements: np.ndarray
    dt: Optional[float]

    def __len__(self) -> int:
        return self.times.shape[0]


def ensure_output_dir(path: Union[str, Path]) -> Path:
    """Create the output directory if needed and return it."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def load_measurement_log(path: Union[str, Path], degrees: bool = False) -> MeasurementLog:
    """
    Load a ``t,gamma,beta`` measurement log.

    Args:
        path: CSV file with header ``t,gamma,beta``
        degrees: Angles in the file are degrees and are converted to radians

    Returns:
        MeasurementLog with the sample time inferred as the median gap

    Raises:
        LogParseError: If the header or a row is malformed (1-based line number)
        DataValidationError: If the log is empty or time is not strictly increasing
    """
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise LogParseError(f"invalid UTF-8 in {path}", raw.count(b"\n", 0, e.start) + 1) from e

    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"measurement log {path} is empty") from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise LogParseError(f"malformed row in {path}", int(match.group(1)) if match else 0) from e

    header = [str(c).strip() for c in frame.columns]
    if header != LOG_COLUMNS:
        raise LogParseError(f"expected header {','.join(LOG_COLUMNS)}, got {','.join(header)}", 1)

    # Blank rows are dropped; file line numbers are kept for error messages
    cells = frame.fillna("")
    if not cells.empty:
        cells = cells.apply(lambda column: column.str.strip())
        cells = cells[~(cells == "").all(axis=1)]
    lines = cells.index.to_numpy() + 2
    if cells.empty:
        raise DataValidationError(f"measurement log {path} has no samples")

    values = cells.apply(lambda column: pd.to_numeric(column, errors="coerce"))
    bad = ~np.isfinite(values.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        row = int(np.argmax(bad))
        raise LogParseError(f"cannot parse row {cells.iloc[row].tolist()!r}", int(lines[row]))

    data = values.to_numpy(dtype=float)
    times = data[:, 0]
    gaps = np.diff(times)
    if np.any(gaps <= 0):
        row = int(np.argmax(gaps <= 0)) + 1
        raise DataValidationError(f"timestamps must increase strictly (line {lines[row]})")

    measurements = data[:, 1:3]
    if degrees:
        measurements = np.deg2rad(measurements)

    dt = float(np.median(gaps)) if gaps.size else None
    logger.info(f"Loaded {len(times)} samples from {path}")
    return MeasurementLog(times=times, measurements=measurements, dt=dt)


def write_measurement_log(
        path: Union[str, Path],
        times: np.ndarray,
        measurements: np.ndarray,
        degrees: bool = False
) -> Path:
    """Write a ``t,gamma,beta`` log with 17 significant digits."""
    measurements = np.asarray(measurements, dtype=float).reshape(-1, 2)
    if degrees:
        measurements = np.rad2deg(measurements)
    frame = pd.DataFrame({"t": np.asarray(times, dtype=float), "gamma": measurements[:, 0], "beta": measurements[:, 1]})
    return write_table(path, frame)


def write_table(path: Union[str, Path], table: Union[pd.DataFrame, List[Dict[str, Any]]]) -> Path:
    """Write a CSV table (LF line endings, 17 significant digits)."""
    path = Path(path)
    ensure_output_dir(path.parent)
    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame(table)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def to_jsonable(value: Any) -> Any:
    """Convert numpy containers and scalars to JSON types; NaN becomes null."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_result_document(path: Union[str, Path], document: Dict[str, Any]) -> Path:
    """Write a result document as sorted, indented JSON."""
    path = Path(path)
    ensure_output_dir(path.parent)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(to_jsonable(document), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"Wrote result document {path}")
    return path


def read_result_document(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def strip_timing(document: Dict[str, Any]) -> Dict[str, Any]:
    """Copy of a result document without its ``timing`` section."""
    return {k: v for k, v in document.items() if k != "timing"}


def state_frame(times: np.ndarray, states: Dict[str, np.ndarray]) -> pd.DataFrame:
    """
    Table with a ``t`` column and one block of state columns per series.

    The key ``""`` gives unprefixed columns (x, y, ...); any other key prefixes
    them (``mhe_x``, ``mhe_y``, ...).
    """
    columns: Dict[str, np.ndarray] = {"t": np.asarray(times, dtype=float)}
    for prefix, values in states.items():
        values = np.asarray(values, dtype=float).reshape(-1, 5)
        for index, name in enumerate(STATE_COLUMNS):
            columns[f"{prefix}_{name}" if prefix else name] = values[:, index]
    return pd.DataFrame(columns)


def load_state_table(path: Union[str, Path]) -> np.ndarray:
    """
    Read the (x, y, z, theta, phi) columns of a truth table.

    Raises:
        DataValidationError: If a state column is missing or holds non-numeric values
    """
    frame = pd.read_csv(path)
    missing = [name for name in STATE_COLUMNS if name not in frame.columns]
    if missing:
        raise DataValidationError(f"truth table {path} lacks columns {missing}")
    values = frame[STATE_COLUMNS].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataValidationError(f"truth table {path} holds non-numeric values")
    return values
