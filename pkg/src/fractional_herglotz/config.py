"""Run configuration: problem JSON files, kernel and parameter-set specs, CLI flags."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .applications import OscillatorParams
from .errors import ConfigError, DomainError
from .herglotz import Extremum, HerglotzProblem
from .kernels import KernelSpec, ParameterSet, check_order, kernel_for_order, make_caputo_kernel
from .lagrangians import Lagrangian, lagrangian_from_spec
from .operators import OperatorConfig
from .solver import InitialGuess, SolveOptions

COMMANDS = ("apply", "ibp-check", "solve", "verify", "noether", "oscillator", "convergence")

DEFAULT_NODES = 201
DEFAULT_SEED = 0

PROBLEM_KEYS = {
    "dimension",
    "lagrangian",
    "alpha",
    "classical",
    "kernel",
    "pset",
    "x_a",
    "x_b",
    "z_a",
    "extremum",
    "nodes",
    "solver",
    "seed",
}
SOLVER_KEYS = {
    "max_iterations",
    "gradient_tolerance",
    "step_tolerance",
    "fd_step",
    "memory",
    "preconditioned",
    "initial_guess",
}


@dataclass
class ProblemConfig:
    """A validated problem file."""

    dimension: int
    lagrangian: Lagrangian
    op_config: OperatorConfig
    x_a: tuple[float, ...]
    x_b: tuple[float | None, ...]
    z_a: float = 0.0
    extremum: Extremum = Extremum.MIN
    nodes: int = DEFAULT_NODES
    solver: SolveOptions = field(default_factory=SolveOptions)
    seed: int = DEFAULT_SEED

    def build_problem(self) -> HerglotzProblem:
        return HerglotzProblem(
            dim=self.dimension,
            lagrangian=self.lagrangian,
            op_config=self.op_config,
            x_a=self.x_a,
            x_b=self.x_b,
            z_a=self.z_a,
            extremum=self.extremum,
        )


@dataclass
class RunConfig:
    """Everything one CLI command needs, after validation and defaults."""

    command: str
    problem: ProblemConfig | None = None
    operator: OperatorConfig | None = None
    nodes: int = DEFAULT_NODES
    seed: int = DEFAULT_SEED
    fail_above: float | None = None
    inputs: dict[str, Path] = field(default_factory=dict)
    outputs: dict[str, Path] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)
    verbosity: int = 0

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError("domain", f"unknown command {self.command!r}")
        for name, path in self.inputs.items():
            if not path.exists():
                raise ConfigError("missing_file", f"{name}: {path} does not exist")


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float) or not math.isfinite(value):
        raise ConfigError("domain", f"{name} must be a finite number, got {value!r}")
    return float(value)


def _integer(value: Any, name: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError("domain", f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def parse_alpha(value: Any) -> float:
    """Validate a fractional order given in a config or on the command line."""
    alpha = _number(value, "alpha")
    try:
        return check_order(alpha)
    except DomainError as e:
        raise ConfigError("domain", f"alpha: {e}") from e


def parse_pset(value: Any) -> ParameterSet:
    """``[a, b, p, q]`` from JSON or ``"a,b,p,q"`` from the command line."""
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",")]
        try:
            value = [float(p) for p in parts]
        except ValueError as e:
            raise ConfigError("malformed", f"pset must be a,b,p,q, got {value!r}") from e
    if not isinstance(value, list | tuple) or len(value) != 4:
        raise ConfigError("malformed", f"pset must have four entries a,b,p,q, got {value!r}")
    a, b, p, q = (_number(v, "pset") for v in value)
    try:
        return ParameterSet(a, b, p, q)
    except DomainError as e:
        raise ConfigError("domain", f"pset: {e}") from e


def parse_kernel(value: Any, alpha: float | None) -> KernelSpec:
    """Kernel spec object (or JSON text); ``None`` means the Caputo kernel of ``alpha``.

    Raises:
        ConfigError: For unknown families, keys or invalid parameters.
    """
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError as e:
            raise ConfigError("malformed", f"kernel is not valid JSON: {e.msg}") from e
    if value is None:
        if alpha is None:
            raise ConfigError("missing_field", "kernel needs alpha or an explicit kernel spec")
        return make_caputo_kernel(alpha)
    if not isinstance(value, dict):
        raise ConfigError("malformed", "kernel must be an object")

    family = value.get("family")
    allowed = {
        "power_law": {"family", "alpha", "beta"},
        "exponential": {"family", "rho", "c"},
        "tabulated": {"family", "samples", "require_monotone"},
    }
    if family not in allowed:
        families = ", ".join(sorted(allowed))
        raise ConfigError("domain", f"kernel.family must be one of {families}, got {family!r}")
    unknown = set(value) - allowed[family]
    if unknown:
        raise ConfigError("unknown_key", f"kernel.{sorted(unknown)[0]}")

    try:
        if family == "power_law":
            if "beta" in value:
                return KernelSpec.power_law(_number(value["beta"], "kernel.beta"))
            order = value.get("alpha", alpha)
            if order is None:
                raise ConfigError("missing_field", "kernel.alpha or kernel.beta is required")
            return make_caputo_kernel(parse_alpha(order))
        if family == "exponential":
            if "rho" not in value:
                raise ConfigError("missing_field", "kernel.rho is required")
            return KernelSpec.exponential(
                _number(value["rho"], "kernel.rho"), _number(value.get("c", 1.0), "kernel.c")
            )
        samples = value.get("samples")
        if not isinstance(samples, list):
            raise ConfigError("missing_field", "kernel.samples must be a list of [s, k] pairs")
        pairs: list[tuple[float, float]] = []
        for pair in samples:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("malformed", "kernel.samples entries must be [s, k] pairs")
            pairs.append((_number(pair[0], "kernel.samples"), _number(pair[1], "kernel.samples")))
        monotone = bool(value.get("require_monotone", True))
        return KernelSpec.tabulated(pairs, require_monotone=monotone)
    except DomainError as e:
        raise ConfigError("domain", f"kernel: {e}") from e


def operator_config(
    pset: ParameterSet, alpha: float | None, classical: bool, kernel: Any = None
) -> OperatorConfig:
    """Combine order, classical switch and kernel; alpha and classical exclude each other."""
    if classical and alpha is not None:
        raise ConfigError("conflict", "alpha and classical cannot be combined")
    if classical:
        return OperatorConfig.classical(pset)
    if alpha is None:
        raise ConfigError("missing_field", "one of alpha or classical is required")
    return OperatorConfig(pset=pset, alpha=alpha, kernel=parse_kernel(kernel, alpha))


def _vector(value: Any, name: str, dim: int, allow_none: bool = False) -> tuple[Any, ...]:
    if not isinstance(value, list):
        value = [value]
    if len(value) != dim:
        raise ConfigError("domain", f"{name} must have {dim} components, got {len(value)}")
    return tuple(None if (allow_none and v is None) else _number(v, name) for v in value)


def parse_solver(value: Any) -> SolveOptions:
    if value is None:
        return SolveOptions()
    if not isinstance(value, dict):
        raise ConfigError("malformed", "solver must be an object")
    unknown = set(value) - SOLVER_KEYS
    if unknown:
        raise ConfigError("unknown_key", f"solver.{sorted(unknown)[0]}")
    kwargs: dict[str, Any] = {}
    for key in ("max_iterations", "memory"):
        if key in value:
            kwargs[key] = _integer(value[key], f"solver.{key}", 1)
    for key in ("gradient_tolerance", "step_tolerance", "fd_step"):
        if key in value:
            kwargs[key] = _number(value[key], f"solver.{key}")
    if "preconditioned" in value:
        kwargs["preconditioned"] = bool(value["preconditioned"])
    if "initial_guess" in value:
        try:
            kwargs["initial_guess"] = InitialGuess(value["initial_guess"])
        except ValueError as e:
            raise ConfigError(
                "domain", "solver.initial_guess must be linear_interp or constant_left"
            ) from e
    try:
        return SolveOptions(**kwargs)
    except DomainError as e:
        raise ConfigError("domain", f"solver: {e}") from e


def parse_problem_config(data: Any) -> ProblemConfig:
    """Validate a decoded problem object.

    Raises:
        ConfigError: Naming the offending key or field.
    """
    if not isinstance(data, dict):
        raise ConfigError("malformed", "problem config must be a JSON object")
    unknown = set(data) - PROBLEM_KEYS
    if unknown:
        raise ConfigError("unknown_key", sorted(unknown)[0])
    for required in ("lagrangian", "pset", "x_a"):
        if required not in data:
            raise ConfigError("missing_field", required)
    if "alpha" not in data and not data.get("classical", False):
        raise ConfigError("missing_field", "alpha (or classical: true)")

    dim = _integer(data.get("dimension", 1), "dimension", 1)
    alpha = parse_alpha(data["alpha"]) if "alpha" in data else None
    pset = parse_pset(data["pset"])
    op = operator_config(pset, alpha, bool(data.get("classical", False)), data.get("kernel"))
    if not isinstance(data["lagrangian"], dict):
        raise ConfigError("malformed", "lagrangian must be an object")

    x_b_raw = data.get("x_b", [None] * dim)
    if x_b_raw is None:
        x_b_raw = [None] * dim
    try:
        extremum = Extremum(data.get("extremum", "min"))
    except ValueError as e:
        raise ConfigError("domain", "extremum must be min or max") from e

    return ProblemConfig(
        dimension=dim,
        lagrangian=lagrangian_from_spec(data["lagrangian"]),
        op_config=op,
        x_a=_vector(data["x_a"], "x_a", dim),
        x_b=_vector(x_b_raw, "x_b", dim, allow_none=True),
        z_a=_number(data.get("z_a", 0.0), "z_a"),
        extremum=extremum,
        nodes=_integer(data.get("nodes", DEFAULT_NODES), "nodes", 5),
        solver=parse_solver(data.get("solver")),
        seed=_integer(data.get("seed", DEFAULT_SEED), "seed", 0),
    )


def load_problem_config(path: Path) -> ProblemConfig:
    """Read and validate a problem JSON file."""
    if not path.exists():
        raise ConfigError("missing_file", f"{path} does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError("malformed", f"{path}: {e.msg} (line {e.lineno})") from e
    return parse_problem_config(data)


OPERATOR_COMMANDS = ("apply", "ibp-check")


def parse_config(
    command: str,
    config_path: Path | None = None,
    *,
    alpha: float | None = None,
    classical: bool = False,
    pset: str | None = None,
    kernel: str | None = None,
    nodes: int | None = None,
    seed: int | None = None,
    fail_above: float | None = None,
    inputs: dict[str, Path] | None = None,
    outputs: dict[str, Path] | None = None,
    options: dict[str, Any] | None = None,
    verbosity: int = 0,
) -> RunConfig:
    """Build a RunConfig from an optional problem file and command-line flags.

    Flags override the file; ``--alpha`` together with ``--classical`` is a conflict.
    ``--alpha`` keeps the kernel family of the file (see :func:`kernels.kernel_for_order`).
    The operator commands build their operator from ``pset``, ``alpha``/``classical``
    and ``kernel`` instead of a problem file.

    Example:
        >>> parse_config("convergence").nodes
        201
    """
    if alpha is not None and classical:
        raise ConfigError("conflict", "--alpha and --classical cannot be combined")
    if alpha is not None:
        alpha = parse_alpha(alpha)
    if fail_above is not None and not fail_above > 0.0:
        raise ConfigError("domain", f"--fail-above must be > 0, got {fail_above}")

    problem = load_problem_config(config_path) if config_path is not None else None
    if problem is not None:
        pset_ = problem.op_config.pset
        if classical:
            problem.op_config = OperatorConfig.classical(pset_)
        elif alpha is not None:
            kernel_ = kernel_for_order(problem.op_config.kernel, alpha)
            problem.op_config = OperatorConfig(pset=pset_, alpha=alpha, kernel=kernel_)

    operator: OperatorConfig | None = None
    if command in OPERATOR_COMMANDS:
        if pset is None:
            raise ConfigError("missing_field", "--pset")
        operator = operator_config(parse_pset(pset), alpha, classical, kernel)

    if nodes is not None:
        _integer(nodes, "nodes", 5)
    resolved_nodes = nodes if nodes is not None else (problem.nodes if problem else DEFAULT_NODES)
    resolved_seed = seed if seed is not None else (problem.seed if problem else DEFAULT_SEED)
    return RunConfig(
        command=command,
        problem=problem,
        operator=operator,
        nodes=resolved_nodes,
        seed=resolved_seed,
        fail_above=fail_above,
        inputs=dict(inputs or {}),
        outputs=dict(outputs or {}),
        options=dict(options or {}),
        verbosity=verbosity,
    )


def parse_sweep(value: str) -> list[float]:
    """``"0.9,0.95,0.99"`` to a list of validated orders."""
    try:
        orders = [float(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError("malformed", f"--sweep must be a comma list of orders: {value!r}") from e
    if not orders:
        raise ConfigError("malformed", "--sweep needs at least one order")
    return [parse_alpha(a) for a in orders]


def oscillator_params(options: dict[str, Any]) -> OscillatorParams:
    """Build the oscillator of the ``oscillator`` command from its flag values.

    Without ``sweep`` exactly one of ``alpha`` and ``classical`` must be set.
    """
    alpha = options.get("alpha")
    classical = bool(options.get("classical", False))
    if alpha is not None and classical:
        raise ConfigError("conflict", "--alpha and --classical cannot be combined")
    if alpha is None and not classical and not options.get("sweep"):
        raise ConfigError("missing_field", "one of --alpha, --classical or --sweep is required")
    if alpha is not None:
        alpha = parse_alpha(alpha)
    kernel = None
    if options.get("kernel") is not None:
        if alpha is None and not options.get("sweep"):
            raise ConfigError("missing_field", "--kernel needs --alpha or --sweep")
        kernel = parse_kernel(options["kernel"], alpha)
    try:
        return OscillatorParams(
            m=_number(options.get("m", 1.0), "m"),
            k=_number(options.get("k", 1.0), "k"),
            lambda0=_number(options.get("lambda0", 0.0), "lambda0"),
            b=_number(options.get("b", 1.0), "b"),
            x0=_number(options.get("x0", 1.0), "x0"),
            xb=None if options.get("xb") is None else _number(options["xb"], "xb"),
            z0=_number(options.get("z0", 0.0), "z0"),
            alpha=alpha,
            kernel=kernel,
        )
    except DomainError as e:
        raise ConfigError("domain", str(e)) from e
