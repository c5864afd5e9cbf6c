"""Every report kind written by the command lines validates against docs/schemas."""

import json
from pathlib import Path
from typing import Any

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource
from typer.testing import CliRunner

from fractional_herglotz.cli import app, fracop_app
from fractional_herglotz.numgrid import Grid, GridFunction
from fractional_herglotz.storage import write_grid_function

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "docs" / "schemas"

runner = CliRunner()


@pytest.fixture(scope="module")
def registry() -> Registry:
    """All schemas, so that references to common.schema.json resolve."""
    resources = []
    for path in sorted(SCHEMA_DIR.glob("*.schema.json")):
        contents = json.loads(path.read_text())
        resources.append((contents["$id"], Resource.from_contents(contents)))
    return Registry().with_resources(resources)


def _validate(registry: Registry, kind: str, report: dict[str, Any]) -> None:
    schema = json.loads((SCHEMA_DIR / f"{kind}.schema.json").read_text())
    Draft202012Validator.check_schema(schema)
    errors = sorted(
        Draft202012Validator(schema, registry=registry).iter_errors(report),
        key=lambda e: list(e.path),
    )
    assert not errors, [f"{list(e.path)}: {e.message}" for e in errors]


def _run(cli: Any, args: list[str], report: Path) -> dict[str, Any]:
    result = runner.invoke(cli, [*args, "--report", str(report)])
    assert result.exit_code in (0, 3, 4), result.output
    return json.loads(report.read_text())


@pytest.fixture
def problem_file(tmp_path: Path) -> Path:
    """L = v^2/2 with x(0) = 0, x(1) = 1 in classical mode on 21 nodes."""
    path = tmp_path / "problem.json"
    data = {
        "lagrangian": {"name": "quadratic", "a": 1.0},
        "classical": True,
        "pset": [0, 1, 1, 0],
        "x_a": [0.0],
        "x_b": [1.0],
        "nodes": 21,
    }
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def solution(tmp_path: Path, problem_file: Path) -> Path:
    out = tmp_path / "solution.csv"
    result = runner.invoke(app, ["solve", "--config", str(problem_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture
def sampled(tmp_path: Path) -> tuple[Path, Path]:
    """f = t(1 - t) and g = 1 on 41 nodes."""
    grid = Grid(0.0, 1.0, 41)
    f = GridFunction.from_function(grid, lambda t: t * (1 - t))
    g = GridFunction.constant(grid, 1.0)
    return write_grid_function(tmp_path / "f.csv", f), write_grid_function(tmp_path / "g.csv", g)


def test_operator_reports(
    tmp_path: Path, registry: Registry, sampled: tuple[Path, Path]
) -> None:
    """apply and ibp-check reports, the latter with findings."""
    f, g = sampled
    report = _run(
        fracop_app, ["apply", "--alpha", "0.5", "--op", "A", "--input", str(f)], tmp_path / "a.json"
    )
    _validate(registry, "apply", report)

    args = ["ibp-check", "--alpha", "0.5", "--f", str(f), "--g", str(g), "--fail-above", "1e-12"]
    report = _run(fracop_app, args, tmp_path / "ibp.json")
    assert report["findings"]
    _validate(registry, "ibp", report)


def test_problem_reports(
    tmp_path: Path, registry: Registry, problem_file: Path, solution: Path
) -> None:
    """solve, verify, noether and convergence reports."""
    config = ["--config", str(problem_file)]
    report = _run(app, ["solve", *config, "--fail-above", "1e-3"], tmp_path / "solve.json")
    assert report["boundary_layer"] == 0.05
    _validate(registry, "solve", report)

    checked = [*config, "--solution", str(solution)]
    _validate(registry, "verify", _run(app, ["verify", *checked], tmp_path / "verify.json"))
    _validate(registry, "noether", _run(app, ["noether", *checked], tmp_path / "noether.json"))

    args = ["convergence", *config, "--nodes", "11", "--levels", "2", "--fail-above", "1e-12"]
    report = _run(app, args, tmp_path / "convergence.json")
    assert len(report["el_residual_core_supnorms"]) == 2
    _validate(registry, "convergence", report)


@pytest.mark.parametrize(
    "order",
    [["--classical"], ["--sweep", "0.9"]],
    ids=["classical", "sweep"],
)
def test_oscillator_reports(tmp_path: Path, registry: Registry, order: list[str]) -> None:
    """Single classical runs and sweeps share one schema."""
    args = ["oscillator", *order, "--lambda0", "0.2", "--xb", "0.5", "--nodes", "21"]
    args += ["--out-dir", str(tmp_path / "osc"), "--fail-above", "1.0"]
    result = runner.invoke(app, args)
    assert result.exit_code in (0, 3, 4), result.output
    report = json.loads((tmp_path / "osc" / "report.json").read_text())
    assert report["kind"] == "oscillator"
    _validate(registry, "oscillator", report)
