"""CSV traces, tables, magnet curves and run manifests on disk"""

import os
from typing import Dict, List, Optional, Sequence

import numpy as np

from morphosim.core.errors import NonUniformSamplingError
from morphosim.core.timeseries import TimeSeries
from morphosim.services.actuators import MagneticSpringModel
from morphosim.storage.models import RunManifest
from morphosim.utils.logging_config import get_logger

logger = get_logger(__name__)

# Nine significant digits
NUMBER_FORMAT = "%.8e"
# Relative spread of timestamp steps tolerated when loading a trace
UNIFORM_TOLERANCE = 1e-3


def write_table_csv(path: str, header: Sequence[str], rows) -> str:
    """
    Write a numeric table with a header row.

    Args:
        path: Output file
        header: Column names
        rows: 2-D array-like, one row per record

    Returns:
        The path written
    """
    data = np.atleast_2d(np.asarray(rows, dtype=float))
    if data.size and data.shape[1] != len(header):
        raise ValueError(f"{data.shape[1]} columns but {len(header)} header names")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    np.savetxt(path, data, fmt=NUMBER_FORMAT, delimiter=",", header=",".join(header), comments="")
    logger.debug(f"💾 Wrote {data.shape[0]} row(s) to {path}")
    return path


def write_trace_csv(path: str, ts: TimeSeries, channels: Optional[Sequence[str]] = None) -> str:
    """Write a trace with ``t`` as the first column."""
    names = list(channels) if channels is not None else list(ts.channels)
    columns = [ts.times] + [ts.column(name) for name in names]
    return write_table_csv(path, ["t"] + names, np.column_stack(columns))


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_table_csv(path: str) -> Dict[str, np.ndarray]:
    """Read a headed numeric CSV into named columns."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
    names = [name.strip() for name in header.split(",")]
    if not header or any(not name for name in names) or all(_is_number(name) for name in names):
        raise ValueError(f"{path}: missing or malformed header line")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns but {len(names)} header names")
    return {name: data[:, i] for i, name in enumerate(names)}


def read_trace_csv(path: str) -> TimeSeries:
    """
    Load a trace whose first column is time.

    Raises:
        NonUniformSamplingError: timestamps not evenly spaced
    """
    columns = read_table_csv(path)
    names = list(columns)
    t = columns[names[0]]
    if t.size < 2:
        raise ValueError(f"{path}: a trace needs at least two rows")
    steps = np.diff(t)
    dt = float(np.mean(steps))
    if dt <= 0 or np.max(np.abs(steps - dt)) > UNIFORM_TOLERANCE * dt:
        raise NonUniformSamplingError(f"{path}: timestamps are not uniformly spaced")
    return TimeSeries.from_columns(float(t[0]), dt, {name: columns[name] for name in names[1:]})


def load_magnet_table(path: str, mode: str = "stiff") -> MagneticSpringModel:
    """Tabulated magnet model from a (gap_m, force_N) CSV with a header line."""
    columns = read_table_csv(path)
    if len(columns) != 2:
        raise ValueError(f"{path}: magnet table needs exactly two columns (gap_m, force_N)")
    gaps, forces = columns.values()
    logger.info(f"🧲 Loaded {gaps.size} magnet samples from {path}")
    return MagneticSpringModel.tabulated(mode, gaps, forces)


def write_summary(path: str, items: Dict[str, object]) -> List[str]:
    """Write key=value summary lines and return them."""
    lines = [f"{key}={value}" for key, value in items.items()]
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return lines


def write_manifest(path: str, manifest: RunManifest) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(manifest.lines()) + "\n")
    logger.debug(f"💾 Manifest written to {path}")
    return path
