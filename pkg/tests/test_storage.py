"""Tests for trajectory CSVs and JSON reports."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from fractional_herglotz.errors import ConfigError
from fractional_herglotz.numgrid import Grid, GridFunction
from fractional_herglotz.storage import (
    RunStore,
    csv_header,
    dumps_report,
    read_grid_function,
    write_grid_function,
    write_report,
)


@pytest.fixture
def trajectory() -> GridFunction:
    """A two-component trajectory on [0, 2]."""
    grid = Grid(0.0, 2.0, 9)
    return GridFunction(grid, np.column_stack([np.sin(grid.nodes), np.exp(-grid.nodes)]))


def test_csv_header() -> None:
    """t followed by one column per component."""
    assert csv_header(1) == "t,x_1"
    assert csv_header(3) == "t,x_1,x_2,x_3"


def test_written_trajectory_reads_back_exactly(tmp_path: Path, trajectory: GridFunction) -> None:
    """17 significant digits reproduce every double."""
    path = write_grid_function(tmp_path / "nested" / "x.csv", trajectory)
    assert path.read_text().splitlines()[0] == "t,x_1,x_2"
    loaded = read_grid_function(path)
    assert loaded.grid == trajectory.grid
    assert np.array_equal(loaded.values, trajectory.values)


def test_read_rejects_missing_and_malformed_files(tmp_path: Path) -> None:
    """Missing files, wrong headers, short tables and non-uniform grids are refused."""
    with pytest.raises(ConfigError) as exc:
        read_grid_function(tmp_path / "absent.csv")
    assert exc.value.kind == "missing_file"

    cases = {
        "header.csv": "time,x\n0,1\n0.5,1\n1,1\n",
        "short.csv": "t,x_1\n0,1\n1,1\n",
        "ragged.csv": "t,x_1,x_2\n0,1\n0.5,1\n1,1\n",
        "uneven.csv": "t,x_1\n0,1\n0.2,1\n1,1\n",
        "text.csv": "t,x_1\n0,a\n0.5,b\n1,c\n",
    }
    for name, content in cases.items():
        path = tmp_path / name
        path.write_text(content)
        with pytest.raises(ConfigError) as exc:
            read_grid_function(path)
        assert exc.value.kind == "malformed", name


def test_dumps_report_is_sorted_and_json_safe() -> None:
    """Keys are sorted, numpy values become plain JSON, non-finite floats become strings."""
    text = dumps_report({"b": np.float64(1.5), "a": np.array([1, 2]), "c": math.inf})
    assert text.endswith("\n")
    data = json.loads(text)
    assert list(data) == ["a", "b", "c"]
    assert data == {"a": [1, 2], "b": 1.5, "c": "inf"}


def test_write_report_creates_parent_directories(tmp_path: Path) -> None:
    """Reports read back as written, parents created on the way."""
    path = write_report(tmp_path / "out" / "report.json", {"kind": "solve", "z_b": 0.5})
    assert json.loads(path.read_text()) == {"kind": "solve", "z_b": 0.5}


def test_run_store(tmp_path: Path, trajectory: GridFunction) -> None:
    """Trajectories and reports land in the output directory."""
    store = RunStore(tmp_path / "run")
    store.save_trajectory("alpha=0.9", trajectory)
    store.save_trajectory("classical", trajectory)
    path = store.save_report("summary", {"kind": "oscillator"})
    assert sorted(p.name for p in (tmp_path / "run").iterdir()) == [
        "alpha=0.9.csv",
        "classical.csv",
        "summary.json",
    ]
    assert json.loads(path.read_text()) == {"kind": "oscillator"}
