"""Tests for problem files and command-line configuration."""

import json
from pathlib import Path
from typing import Any

import pytest

from fractional_herglotz.config import (
    DEFAULT_NODES,
    load_problem_config,
    operator_config,
    oscillator_params,
    parse_alpha,
    parse_config,
    parse_kernel,
    parse_problem_config,
    parse_pset,
    parse_solver,
    parse_sweep,
)
from fractional_herglotz.errors import ConfigError
from fractional_herglotz.herglotz import Extremum
from fractional_herglotz.kernels import KernelFamily, KernelSpec, ParameterSet, make_caputo_kernel
from fractional_herglotz.solver import InitialGuess


@pytest.fixture
def problem_data() -> dict[str, Any]:
    """A fractional oscillator problem with a free right endpoint."""
    return {
        "lagrangian": {"name": "oscillator", "m": 1.0, "k": 2.0, "lambda0": 0.1},
        "alpha": 0.5,
        "pset": [0, 1, 1, 0],
        "x_a": [1.0],
        "x_b": [None],
        "nodes": 41,
        "solver": {"max_iterations": 200, "initial_guess": "constant_left"},
    }


@pytest.fixture
def problem_file(tmp_path: Path, problem_data: dict[str, Any]) -> Path:
    """The problem written to disk."""
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(problem_data))
    return path


def test_parse_alpha() -> None:
    """Orders strictly inside (0, 1)."""
    assert parse_alpha(0.25) == 0.25
    for bad in (0, 1, 1.5, True, "0.5", float("nan")):
        with pytest.raises(ConfigError) as exc:
            parse_alpha(bad)
        assert exc.value.kind == "domain"


def test_parse_pset() -> None:
    """Comma text and JSON lists; shape and domain errors are distinguished."""
    assert parse_pset("0,1,1,0") == ParameterSet(0, 1, 1, 0)
    assert parse_pset([0, 2, 0.5, 0.5]) == ParameterSet(0, 2, 0.5, 0.5)
    with pytest.raises(ConfigError) as exc:
        parse_pset("0,1,x,0")
    assert exc.value.kind == "malformed"
    with pytest.raises(ConfigError) as exc:
        parse_pset([0, 1, 1])
    assert exc.value.kind == "malformed"
    with pytest.raises(ConfigError) as exc:
        parse_pset("1,0,1,0")
    assert exc.value.kind == "domain"


def test_parse_kernel_families() -> None:
    """Caputo default, explicit power law, exponential and tabulated kernels."""
    assert parse_kernel(None, 0.3) == KernelSpec.power_law(0.7)
    power = parse_kernel({"family": "power_law", "beta": 0.4}, None)
    assert power.singularity_exponent == pytest.approx(0.6)
    exp_kernel = parse_kernel('{"family": "exponential", "rho": 2.0}', 0.5)
    assert exp_kernel.family is KernelFamily.EXPONENTIAL
    tab = parse_kernel({"family": "tabulated", "samples": [[0.1, 2.0], [1.0, 1.0]]}, 0.5)
    assert tab.family is KernelFamily.TABULATED


@pytest.mark.parametrize(
    ("value", "alpha", "kind"),
    [
        ("{not json", 0.5, "malformed"),
        (None, None, "missing_field"),
        ([1, 2], 0.5, "malformed"),
        ({"family": "gaussian"}, 0.5, "domain"),
        ({"family": "exponential", "rho": 1.0, "scale": 2}, 0.5, "unknown_key"),
        ({"family": "exponential"}, 0.5, "missing_field"),
        ({"family": "exponential", "rho": -1.0}, 0.5, "domain"),
        ({"family": "power_law"}, None, "missing_field"),
        ({"family": "tabulated", "samples": [[1.0]]}, 0.5, "malformed"),
        ({"family": "tabulated", "samples": [[0.1, 1.0], [1.0, 2.0]]}, 0.5, "domain"),
    ],
)
def test_parse_kernel_errors(value: Any, alpha: float | None, kind: str) -> None:
    """Every invalid kernel spec maps to one error kind."""
    with pytest.raises(ConfigError) as exc:
        parse_kernel(value, alpha)
    assert exc.value.kind == kind


def test_operator_config_rules() -> None:
    """alpha and classical exclude each other; one is required."""
    pset = ParameterSet(0, 1, 1, 0)
    assert operator_config(pset, None, True).classical_mode
    assert operator_config(pset, 0.5, False).alpha == 0.5
    with pytest.raises(ConfigError) as exc:
        operator_config(pset, 0.5, True)
    assert exc.value.kind == "conflict"
    with pytest.raises(ConfigError) as exc:
        operator_config(pset, None, False)
    assert exc.value.kind == "missing_field"


def test_parse_solver() -> None:
    """Known keys are typed and validated."""
    opts = parse_solver({"max_iterations": 10, "fd_step": 1e-5, "initial_guess": "linear_interp"})
    assert opts.max_iterations == 10
    assert opts.initial_guess is InitialGuess.LINEAR_INTERP
    assert parse_solver(None).max_iterations == 5000
    with pytest.raises(ConfigError) as exc:
        parse_solver({"tolerance": 1e-3})
    assert exc.value.kind == "unknown_key"
    with pytest.raises(ConfigError) as exc:
        parse_solver({"fd_step": 0.5})
    assert exc.value.kind == "domain"
    with pytest.raises(ConfigError):
        parse_solver({"initial_guess": "random"})


def test_parse_problem_config(problem_data: dict[str, Any]) -> None:
    """A complete problem file becomes a HerglotzProblem."""
    cfg = parse_problem_config(problem_data)
    assert cfg.dimension == 1
    assert cfg.nodes == 41
    assert cfg.extremum is Extremum.MIN
    assert cfg.solver.initial_guess is InitialGuess.CONSTANT_LEFT
    prob = cfg.build_problem()
    assert prob.free_components == [0]
    assert prob.lagrangian.name == "oscillator"
    assert prob.op_config.alpha == 0.5


@pytest.mark.parametrize(
    ("change", "kind"),
    [
        ({"gamma": 1}, "unknown_key"),
        ({"classical": True}, "conflict"),
        ({"alpha": 2.0}, "domain"),
        ({"x_a": [1.0, 2.0]}, "domain"),
        ({"extremum": "saddle"}, "domain"),
        ({"nodes": 3}, "domain"),
        ({"lagrangian": "oscillator"}, "malformed"),
    ],
)
def test_parse_problem_config_errors(
    problem_data: dict[str, Any], change: dict[str, Any], kind: str
) -> None:
    """Bad fields are reported by kind."""
    data = {**problem_data, **change}
    with pytest.raises(ConfigError) as exc:
        parse_problem_config(data)
    assert exc.value.kind == kind


def test_missing_required_fields(problem_data: dict[str, Any]) -> None:
    """lagrangian, pset, x_a and an order are required."""
    for key in ("lagrangian", "pset", "x_a", "alpha"):
        data = {k: v for k, v in problem_data.items() if k != key}
        with pytest.raises(ConfigError) as exc:
            parse_problem_config(data)
        assert exc.value.kind == "missing_field"


def test_load_problem_config(tmp_path: Path, problem_file: Path) -> None:
    """Files are read, missing files and bad JSON are reported."""
    assert load_problem_config(problem_file).nodes == 41
    with pytest.raises(ConfigError) as exc:
        load_problem_config(tmp_path / "nope.json")
    assert exc.value.kind == "missing_file"
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigError) as exc:
        load_problem_config(broken)
    assert exc.value.kind == "malformed"


def test_parse_config_flags_override_file(problem_file: Path) -> None:
    """--classical replaces the file's order; --nodes replaces its node count."""
    run = parse_config("solve", problem_file, classical=True, nodes=21)
    assert run.problem is not None
    assert run.problem.op_config.classical_mode
    assert run.nodes == 21
    assert run.seed == 0
    default = parse_config("solve", problem_file)
    assert default.nodes == 41


def test_parse_config_defaults_and_errors(tmp_path: Path) -> None:
    """Defaults apply without a file; conflicts and bad values are rejected."""
    assert parse_config("convergence").nodes == DEFAULT_NODES
    with pytest.raises(ConfigError) as exc:
        parse_config("solve", alpha=0.5, classical=True)
    assert exc.value.kind == "conflict"
    with pytest.raises(ConfigError) as exc:
        parse_config("solve", fail_above=0.0)
    assert exc.value.kind == "domain"
    with pytest.raises(ConfigError) as exc:
        parse_config("solve", nodes=4)
    assert exc.value.kind == "domain"
    with pytest.raises(ConfigError) as exc:
        parse_config("launch")
    assert exc.value.kind == "domain"
    with pytest.raises(ConfigError) as exc:
        parse_config("verify", inputs={"trajectory": tmp_path / "x.csv"})
    assert exc.value.kind == "missing_file"


def test_parse_config_operator_commands() -> None:
    """apply and ibp-check need a parameter set and build the operator."""
    run = parse_config("ibp-check", alpha=0.5, pset="0,1,1,0")
    assert run.operator is not None
    assert run.operator.alpha == 0.5
    with pytest.raises(ConfigError) as exc:
        parse_config("apply", alpha=0.5)
    assert exc.value.kind == "missing_field"


def test_parse_sweep() -> None:
    """Comma-separated orders, each validated."""
    assert parse_sweep("0.9, 0.95,0.99") == [0.9, 0.95, 0.99]
    with pytest.raises(ConfigError):
        parse_sweep("0.9,high")
    with pytest.raises(ConfigError):
        parse_sweep(",")
    with pytest.raises(ConfigError):
        parse_sweep("0.5,1.0")


def test_oscillator_params() -> None:
    """Flag values with defaults; order flags are validated."""
    p = oscillator_params({"alpha": 0.8, "lambda0": 0.2, "xb": 0.0})
    assert p.alpha == 0.8
    assert p.m == 1.0
    assert p.xb == 0.0
    assert oscillator_params({"classical": True}).classical
    assert oscillator_params({"sweep": "0.9"}).classical
    with pytest.raises(ConfigError) as exc:
        oscillator_params({})
    assert exc.value.kind == "missing_field"
    with pytest.raises(ConfigError) as exc:
        oscillator_params({"alpha": 0.5, "classical": True})
    assert exc.value.kind == "conflict"
    with pytest.raises(ConfigError) as exc:
        oscillator_params({"classical": True, "m": -1.0})
    assert exc.value.kind == "domain"


def test_alpha_flag_keeps_kernel_family(
    tmp_path: Path, problem_data: dict[str, Any], problem_file: Path
) -> None:
    """--alpha re-orders a power-law file kernel but leaves an exponential one alone."""
    memory = {"family": "exponential", "rho": 2.0}
    path = tmp_path / "memory.json"
    path.write_text(json.dumps({**problem_data, "kernel": memory}))
    run = parse_config("solve", path, alpha=0.3)
    assert run.problem is not None
    assert run.problem.op_config.alpha == 0.3
    assert run.problem.op_config.kernel == KernelSpec.exponential(2.0)

    run = parse_config("solve", problem_file, alpha=0.3)
    assert run.problem is not None
    assert run.problem.op_config.kernel == make_caputo_kernel(0.3)


def test_oscillator_sweep_with_kernel() -> None:
    """--kernel may accompany --sweep; every order then uses that kernel."""
    p = oscillator_params({"sweep": "0.9", "kernel": '{"family": "exponential", "rho": 2.0}'})
    assert p.classical
    assert p.with_alpha(0.9).op_config().kernel == KernelSpec.exponential(2.0)
    with pytest.raises(ConfigError) as exc:
        oscillator_params({"classical": True, "kernel": '{"family": "exponential", "rho": 2.0}'})
    assert exc.value.kind == "missing_field"
