"""CSV trajectories and JSON reports on disk."""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .numgrid import Grid, GridFunction

CSV_FORMAT = "%.17g"


def csv_header(dim: int) -> str:
    return ",".join(["t", *(f"x_{j + 1}" for j in range(dim))])


def write_grid_function(path: Path | str, f: GridFunction) -> Path:
    """Write ``t,x_1,...,x_d`` rows with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([f.t, f.values])
    np.savetxt(path, table, fmt=CSV_FORMAT, delimiter=",", header=csv_header(f.dim), comments="")
    return path


def read_grid_function(path: Path | str) -> GridFunction:
    """Read a trajectory CSV; the t column must be a uniform grid.

    Raises:
        ConfigError: If the file is missing, malformed or not on a uniform grid.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError("missing_file", f"{path} does not exist")
    with open(path) as fh:
        header = fh.readline().strip()
    columns = header.split(",")
    if not columns or columns[0] != "t" or len(columns) < 2:
        raise ConfigError("malformed", f"{path}: header must be t,x_1,...,x_d")
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as e:
        raise ConfigError("malformed", f"{path}: {e}") from e
    if table.shape[1] != len(columns) or table.shape[0] < 3:
        raise ConfigError("malformed", f"{path}: expected at least 3 rows of {len(columns)} values")

    t = table[:, 0]
    grid = Grid(float(t[0]), float(t[-1]), len(t))
    if not np.allclose(t, grid.nodes, rtol=0.0, atol=1e-9 * max(1.0, abs(grid.b - grid.a))):
        raise ConfigError("malformed", f"{path}: t column is not a uniform grid")
    return GridFunction(grid, table[:, 1:])


def _clean(value: Any) -> Any:
    """Make a report JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}  # type: ignore[misc]
    if isinstance(value, list | tuple):
        return [_clean(v) for v in value]  # type: ignore[misc]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, np.generic):
        return _clean(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def dumps_report(report: dict[str, Any]) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def write_report(path: Path | str, report: dict[str, Any]) -> Path:
    """Write a report as sorted, 2-space-indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report))
    return path


class RunStore:
    """Output directory for commands that write several files."""

    def __init__(self, output_dir: Path | str):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def trajectory_path(self, name: str) -> Path:
        return self.output_dir / f"{name}.csv"

    def save_trajectory(self, name: str, f: GridFunction) -> Path:
        return write_grid_function(self.trajectory_path(name), f)

    def save_report(self, name: str, report: dict[str, Any]) -> Path:
        return write_report(self.output_dir / f"{name}.json", report)
