"""CLI commands for fractional-herglotz."""

import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .applications import (
    SweepRow,
    SweepTable,
    alpha_sweep,
    classical_reference,
    oscillator_problem,
    oscillator_residual_discrepancy,
)
from .checks import Finding, evaluate_findings, findings_payload
from .config import (
    ProblemConfig,
    RunConfig,
    oscillator_params,
    parse_config,
    parse_sweep,
)
from .errors import ConfigError, ContractError, DomainError, HerglotzError
from .herglotz import (
    HerglotzProblem,
    check_partials,
    classical_herglotz_residual,
    el_residual_core_supnorm,
    el_residual_supnorm,
    evaluate_z,
    transversality_residual,
)
from .noether import (
    TransformationFamily,
    invariance_defect,
    noether_residual,
    scaling,
    tabulated_generator,
    translation,
    variational_identity,
)
from .numgrid import GridFunction, interior_supnorm
from .operators import apply_A, apply_B, apply_K, ibp_residual
from .reports import (
    Report,
    apply_report,
    convergence_report,
    ibp_report,
    noether_report,
    oscillator_report,
    row_label,
    solve_report,
    summary_rows,
    verify_report,
    with_meta,
)
from .solver import (
    SolveOptions,
    endpoint_probe,
    probe_stationarity,
    refine_and_verify,
    solve_direct,
)
from .storage import RunStore, dumps_report, read_grid_function, write_grid_function, write_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4

DEFAULT_OUTPUT_DIR = Path("herglotz-output")

app = typer.Typer(
    name="herglotz",
    help="Fractional Herglotz variational problems: operators, solver and identity checks",
)
fracop_app = typer.Typer(
    name="fracop",
    help="Generalized fractional operators with memory kernels",
)
console = Console()
err_console = Console(stderr=True)

logger = logging.getLogger(__name__)


def configure_logging(verbosity: int) -> None:
    """Route library logging through rich on stderr; -v is INFO, -vv DEBUG."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def _verbosity(ctx: typer.Context) -> int:
    return int((ctx.obj or {}).get("verbosity", 0))


def _main(
    ctx: typer.Context,
    verbose: int = typer.Option(
        0, "--verbose", "-v", count=True, help="Log progress (-v) or solver detail (-vv)"
    ),
) -> None:
    ctx.obj = {"verbosity": verbose}
    configure_logging(verbose)


app.callback()(_main)
fracop_app.callback()(_main)


def _problem(cfg: RunConfig) -> tuple[ProblemConfig, HerglotzProblem]:
    if cfg.problem is None:
        raise ConfigError("missing_field", "--config")
    return cfg.problem, cfg.problem.build_problem()


def _input(cfg: RunConfig, name: str) -> GridFunction:
    if name not in cfg.inputs:
        raise ConfigError("missing_field", f"--{name}")
    return read_grid_function(cfg.inputs[name])


def _run_apply(cfg: RunConfig) -> Report:
    if cfg.operator is None:
        raise ConfigError("missing_field", "--pset")
    f = _input(cfg, "input")
    op = str(cfg.options.get("op", "B")).upper()
    operators = {"K": apply_K, "A": apply_A, "B": apply_B}
    if op not in operators:
        raise ConfigError("domain", f"--op must be one of K, A, B, got {op!r}")
    result = operators[op](cfg.operator, f)
    output = cfg.outputs.get("output")
    if output is not None:
        write_grid_function(output, result)
    return apply_report(cfg.operator, op, result, None if output is None else output.name)


def _run_ibp(cfg: RunConfig) -> Report:
    if cfg.operator is None:
        raise ConfigError("missing_field", "--pset")
    f, g = _input(cfg, "f"), _input(cfg, "g")
    if f.grid != g.grid:
        raise ConfigError("domain", "f and g must share one grid")
    if f.dim != 1 or g.dim != 1:
        raise ConfigError("domain", "integration by parts needs scalar f and g")
    return ibp_report(cfg.operator, ibp_residual(cfg.operator, f, g), f.grid.n_nodes)


def _run_solve(cfg: RunConfig) -> Report:
    problem, prob = _problem(cfg)
    grid = prob.grid(cfg.nodes)
    logger.info("solving %s on %d nodes", prob.lagrangian.name, grid.n_nodes)
    result = solve_direct(prob, grid, problem.solver)
    if not result.converged:
        logger.warning("solver stopped without converging: %s", result.message)
    out = cfg.outputs.get("out")
    if out is not None:
        write_grid_function(out, result.evaluation.x)
    partials = check_partials(prob, seed=cfg.seed)
    stationarity = probe_stationarity(prob, result, problem.solver)
    return solve_report(prob, result, partials, stationarity)


def _run_verify(cfg: RunConfig) -> Report:
    _, prob = _problem(cfg)
    x = _input(cfg, "solution")
    prob.check_trajectory(x)
    ev = evaluate_z(prob, x)
    free = prob.free_components
    transversality = transversality_residual(prob, ev) if free else None
    probes = [endpoint_probe(prob, x, j) for j in free]
    classical_supnorm = None
    if prob.op_config.classical_mode:
        classical_supnorm = float(np.max(interior_supnorm(classical_herglotz_residual(prob, ev))))
    return verify_report(
        prob,
        ev,
        el_residual_supnorm(prob, ev),
        el_residual_core_supnorm(prob, ev),
        transversality,
        probes,
        check_partials(prob, seed=cfg.seed),
        classical_supnorm,
    )


def _generator(spec: str, component: int, dim: int) -> TransformationFamily:
    """``translation``, ``scaling`` or the path of a tabulated generator CSV."""
    if spec == "translation":
        try:
            return translation(component, dim)
        except DomainError as e:
            raise ConfigError("domain", f"--component: {e}") from e
    if spec == "scaling":
        return scaling(dim)
    table = read_grid_function(Path(spec))
    if table.dim != dim:
        raise ConfigError("domain", f"generator table has {table.dim} components, need {dim}")
    return tabulated_generator(table, name=Path(spec).name)


def _run_noether(cfg: RunConfig) -> Report:
    _, prob = _problem(cfg)
    x = _input(cfg, "solution")
    prob.check_trajectory(x)
    xi = _generator(
        str(cfg.options.get("generator", "translation")),
        int(cfg.options.get("component", 0)),
        prob.dim,
    )
    defect = invariance_defect(prob, x, xi)
    if defect > 1e-6:
        logger.warning("generator %s changes z(b) to first order (%.3e)", xi.name, defect)
    ev = evaluate_z(prob, x)
    return noether_report(
        prob,
        ev,
        xi.name,
        defect,
        noether_residual(prob, ev, xi),
        variational_identity(prob, x, xi),
    )


def _run_oscillator(cfg: RunConfig) -> Report:
    p = oscillator_params(cfg.options)
    store = RunStore(cfg.outputs.get("dir", DEFAULT_OUTPUT_DIR))
    grid = p.op_config().grid(cfg.nodes)
    opts = SolveOptions()

    sweep = cfg.options.get("sweep")
    discrepancy: float | None = None
    if sweep:
        table = alpha_sweep(p, parse_sweep(sweep), grid, opts, int(cfg.options.get("jobs", 1)))
    else:
        result = solve_direct(oscillator_problem(p), grid, opts)
        row = SweepRow(
            alpha=p.alpha,
            z_b=result.z_b,
            converged=result.converged,
            el_residual_supnorm=float(np.max(result.el_residual_supnorm)),
            el_residual_core_supnorm=float(np.max(result.el_residual_core_supnorm)),
            trajectory=result.evaluation.x,
        )
        if p.classical and p.xb is not None:
            gap = result.evaluation.x.values[:, 0] - classical_reference(p, grid.nodes)
            row.distance_to_classical = float(np.max(np.abs(gap)))
        discrepancy = oscillator_residual_discrepancy(p, result.evaluation)
        if p.classical:
            table = SweepTable(classical=row)
        else:
            table = SweepTable(rows=[row])

    files: dict[str, str] = {}
    for entry in [table.classical, *table.rows]:
        if entry is not None and entry.trajectory is not None:
            label = row_label(entry.alpha)
            files[label] = store.save_trajectory(label, entry.trajectory).name
    return oscillator_report(p, table, files, discrepancy)


def _run_convergence(cfg: RunConfig) -> Report:
    problem, prob = _problem(cfg)
    levels = int(cfg.options.get("levels", 3))
    if levels < 2:
        raise ConfigError("domain", f"--levels must be >= 2, got {levels}")
    report = refine_and_verify(prob, prob.grid(cfg.nodes), problem.solver, levels)
    return convergence_report(prob, report)


HANDLERS: dict[str, Callable[[RunConfig], Report]] = {
    "apply": _run_apply,
    "ibp-check": _run_ibp,
    "solve": _run_solve,
    "verify": _run_verify,
    "noether": _run_noether,
    "oscillator": _run_oscillator,
    "convergence": _run_convergence,
}


def _print_summary(report: Report) -> None:
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Field")
    table.add_column("Value", justify="right")
    for key, value in summary_rows(report):
        table.add_row(key, value)
    console.print(table)


def _print_findings(findings: list[Finding]) -> None:
    for f in findings:
        style = "red" if f.category == "numerical" else "yellow"
        err_console.print(f"[{style}]✗ {f.rule_id}:[/{style}] {f.observation}")


def run(cfg: RunConfig) -> int:
    """Dispatch a validated RunConfig and return the process exit code.

    0 on success, 2 for configuration errors, 3 for numerical failures and 4 when
    a residual exceeds ``fail_above``.
    """
    try:
        report = HANDLERS[cfg.command](cfg)
    except (ConfigError, DomainError, ContractError) as e:
        err_console.print(f"[red]Error:[/red] {e}")
        return EXIT_CONFIG
    except HerglotzError as e:
        err_console.print(f"[red]Numerical failure:[/red] {e}")
        return EXIT_NUMERICAL

    report = with_meta(report, cfg.command, cfg.seed)
    findings = evaluate_findings(report, cfg.fail_above) if cfg.fail_above is not None else []
    if cfg.fail_above is not None:
        report["findings"] = findings_payload(findings)

    report_path = cfg.outputs.get("report")
    if report_path is not None:
        write_report(report_path, report)
    elif cfg.command == "oscillator":
        store = RunStore(cfg.outputs.get("dir", DEFAULT_OUTPUT_DIR))
        report_path = store.save_report("report", report)

    if cfg.command == "ibp-check":
        typer.echo(dumps_report(report), nl=False)
    else:
        _print_summary(report)
        if report_path is not None:
            console.print(f"[green]✓[/green] Report written to {report_path}")

    if not findings:
        return EXIT_OK
    _print_findings(findings)
    if any(f.category == "numerical" for f in findings):
        return EXIT_NUMERICAL
    return EXIT_VERIFICATION


def _execute(command: str, config_path: Path | None = None, **kwargs: Any) -> None:
    try:
        cfg = parse_config(command, config_path, **kwargs)
    except ConfigError as e:
        err_console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_CONFIG) from e
    code = run(cfg)
    if code != EXIT_OK:
        raise typer.Exit(code)


def _inputs(**paths: Path | None) -> dict[str, Path]:
    return {name: path for name, path in paths.items() if path is not None}


KERNEL_HELP = (
    'Kernel spec as JSON, e.g. {"family": "exponential", "rho": 1.0}; '
    "defaults to the Caputo kernel of --alpha"
)


def apply(
    ctx: typer.Context,
    input_file: Path = typer.Option(..., "--input", help="CSV grid function t,x_1,..."),
    output: Path | None = typer.Option(None, "--output", help="Where to write the result CSV"),
    op: str = typer.Option("B", "--op", help="K (integral), A (Riemann-Liouville), B (Caputo)"),
    pset: str = typer.Option("0,1,1,0", "--pset", help="Parameter set a,b,p,q"),
    alpha: float | None = typer.Option(None, "--alpha", help="Fractional order in (0, 1)"),
    classical: bool = typer.Option(False, "--classical", help="Use the alpha -> 1 limit"),
    kernel: str | None = typer.Option(None, "--kernel", help=KERNEL_HELP),
    report: Path | None = typer.Option(None, "--report", help="Write a JSON report here"),
) -> None:
    """
    Apply K, A or B to a tabulated function.

    Example:
        fracop apply --alpha 0.5 --pset 0,1,1,0 --op B --input f.csv --output g.csv
    """
    _execute(
        "apply",
        alpha=alpha,
        classical=classical,
        pset=pset,
        kernel=kernel,
        inputs=_inputs(input=input_file),
        outputs=_inputs(output=output, report=report),
        options={"op": op},
        verbosity=_verbosity(ctx),
    )


def ibp_check(
    ctx: typer.Context,
    f: Path = typer.Option(..., "--f", help="CSV of f (differentiated side)"),
    g: Path = typer.Option(..., "--g", help="CSV of g (multiplier)"),
    pset: str = typer.Option("0,1,1,0", "--pset", help="Parameter set a,b,p,q"),
    alpha: float | None = typer.Option(None, "--alpha", help="Fractional order in (0, 1)"),
    classical: bool = typer.Option(False, "--classical", help="Use the alpha -> 1 limit"),
    kernel: str | None = typer.Option(None, "--kernel", help=KERNEL_HELP),
    fail_above: float | None = typer.Option(
        None, "--fail-above", help="Exit 4 if the residual exceeds this"
    ),
    report: Path | None = typer.Option(None, "--report", help="Also write the JSON here"),
) -> None:
    """
    Check the integration by parts formula on f and g; prints JSON.

    Example:
        fracop ibp-check --alpha 0.5 --pset 0,1,1,0 --f f.csv --g g.csv
    """
    _execute(
        "ibp-check",
        alpha=alpha,
        classical=classical,
        pset=pset,
        kernel=kernel,
        fail_above=fail_above,
        inputs=_inputs(f=f, g=g),
        outputs=_inputs(report=report),
        verbosity=_verbosity(ctx),
    )


for _app in (app, fracop_app):
    _app.command("apply")(apply)
    _app.command("ibp-check")(ibp_check)


@app.command()
def solve(
    ctx: typer.Context,
    config: Path = typer.Option(..., "--config", help="Problem JSON file"),
    nodes: int | None = typer.Option(None, "--nodes", help="Grid nodes (default 201)"),
    alpha: float | None = typer.Option(None, "--alpha", help="Override the problem's order"),
    classical: bool = typer.Option(False, "--classical", help="Override with the classical limit"),
    out: Path | None = typer.Option(None, "--out", help="Write the solution CSV here"),
    report: Path | None = typer.Option(None, "--report", help="Write the JSON report here"),
    fail_above: float | None = typer.Option(
        None, "--fail-above", help="Exit nonzero if a residual exceeds this"
    ),
    seed: int | None = typer.Option(None, "--seed", help="Seed of the partial-derivative probes"),
) -> None:
    """
    Extremize z(b) by direct transcription.

    Example:
        herglotz solve --config problem.json --nodes 101 --out solution.csv
    """
    _execute(
        "solve",
        config,
        alpha=alpha,
        classical=classical,
        nodes=nodes,
        seed=seed,
        fail_above=fail_above,
        outputs=_inputs(out=out, report=report),
        verbosity=_verbosity(ctx),
    )


@app.command()
def verify(
    ctx: typer.Context,
    config: Path = typer.Option(..., "--config", help="Problem JSON file"),
    solution: Path = typer.Option(..., "--solution", help="Trajectory CSV to check"),
    report: Path | None = typer.Option(None, "--report", help="Write the JSON report here"),
    fail_above: float | None = typer.Option(
        None, "--fail-above", help="Exit 4 if a residual exceeds this"
    ),
    seed: int | None = typer.Option(None, "--seed", help="Seed of the partial-derivative probes"),
) -> None:
    """
    Evaluate Euler-Lagrange, transversality and endpoint residuals of a trajectory.

    Example:
        herglotz verify --config problem.json --solution solution.csv --fail-above 1e-3
    """
    _execute(
        "verify",
        config,
        seed=seed,
        fail_above=fail_above,
        inputs=_inputs(solution=solution),
        outputs=_inputs(report=report),
        verbosity=_verbosity(ctx),
    )


@app.command()
def noether(
    ctx: typer.Context,
    config: Path = typer.Option(..., "--config", help="Problem JSON file"),
    solution: Path = typer.Option(..., "--solution", help="Trajectory CSV to check"),
    generator: str = typer.Option(
        "translation", "--generator", help="translation, scaling, or a generator CSV"
    ),
    component: int = typer.Option(0, "--component", help="Translated component (0-based)"),
    report: Path | None = typer.Option(None, "--report", help="Write the JSON report here"),
    fail_above: float | None = typer.Option(
        None, "--fail-above", help="Exit 4 if the Noether residual exceeds this"
    ),
) -> None:
    """
    Evaluate the Noether operator along a trajectory.

    Example:
        herglotz noether --config problem.json --solution solution.csv --generator translation
    """
    _execute(
        "noether",
        config,
        fail_above=fail_above,
        inputs=_inputs(solution=solution),
        outputs=_inputs(report=report),
        options={"generator": generator, "component": component},
        verbosity=_verbosity(ctx),
    )


@app.command()
def oscillator(
    ctx: typer.Context,
    m: float = typer.Option(1.0, "--m", help="Mass (> 0)"),
    k: float = typer.Option(1.0, "--k", help="Elasticity (>= 0)"),
    lambda0: float = typer.Option(0.0, "--lambda0", help="Damping coefficient"),
    alpha: float | None = typer.Option(None, "--alpha", help="Fractional order in (0, 1)"),
    classical: bool = typer.Option(False, "--classical", help="Classical damped oscillator"),
    kernel: str | None = typer.Option(None, "--kernel", help=KERNEL_HELP),
    nodes: int | None = typer.Option(None, "--nodes", help="Grid nodes (default 201)"),
    b: float = typer.Option(1.0, "--b", help="Final time"),
    x0: float = typer.Option(1.0, "--x0", help="Initial position"),
    xb: float | None = typer.Option(None, "--xb", help="Final position (free if omitted)"),
    z0: float = typer.Option(0.0, "--z0", help="Initial action value"),
    sweep: str | None = typer.Option(None, "--sweep", help="Orders to sweep, e.g. 0.9,0.95"),
    jobs: int = typer.Option(1, "--jobs", help="Parallel sweep entries"),
    out_dir: Path = typer.Option(
        DEFAULT_OUTPUT_DIR,
        "--out-dir",
        envvar="HERGLOTZ_OUTPUT_DIR",
        help="Directory for trajectory CSVs and report.json",
    ),
    report: Path | None = typer.Option(None, "--report", help="Report path (default in --out-dir)"),
    fail_above: float | None = typer.Option(
        None, "--fail-above", help="Exit nonzero if a residual exceeds this"
    ),
) -> None:
    """
    Solve the damped oscillator with memory, optionally sweeping the order.

    Example:
        herglotz oscillator --lambda0 0 --xb 0.5 --sweep 0.9,0.95,0.99 --nodes 401
    """
    _execute(
        "oscillator",
        nodes=nodes,
        fail_above=fail_above,
        outputs=_inputs(dir=out_dir, report=report),
        options={
            "m": m,
            "k": k,
            "lambda0": lambda0,
            "alpha": alpha,
            "classical": classical,
            "kernel": kernel,
            "b": b,
            "x0": x0,
            "xb": xb,
            "z0": z0,
            "sweep": sweep,
            "jobs": jobs,
        },
        verbosity=_verbosity(ctx),
    )


@app.command()
def convergence(
    ctx: typer.Context,
    config: Path = typer.Option(..., "--config", help="Problem JSON file"),
    nodes: int | None = typer.Option(None, "--nodes", help="Coarsest grid nodes"),
    levels: int = typer.Option(3, "--levels", help="Number of grid levels (>= 2)"),
    report: Path | None = typer.Option(None, "--report", help="Write the JSON report here"),
    fail_above: float | None = typer.Option(
        None, "--fail-above", help="Exit 4 if the finest residual exceeds this"
    ),
) -> None:
    """
    Solve on nested grids and report the observed order of z(b).

    Example:
        herglotz convergence --config problem.json --nodes 51 --levels 3
    """
    _execute(
        "convergence",
        config,
        nodes=nodes,
        fail_above=fail_above,
        outputs=_inputs(report=report),
        options={"levels": levels},
        verbosity=_verbosity(ctx),
    )
