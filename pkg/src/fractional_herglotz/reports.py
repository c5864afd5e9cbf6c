"""Report payloads for every command and their console summaries."""

from typing import Any

import numpy as np

from . import __version__
from .applications import OscillatorParams, SweepRow, SweepTable
from .herglotz import BOUNDARY_LAYER, HerglotzEvaluation, HerglotzProblem, PartialsReport
from .kernels import FloatArray
from .noether import NoetherResult, VariationalIdentity
from .numgrid import GridFunction
from .operators import IBPResult, OperatorConfig
from .solver import ConvergenceReport, EndpointProbe, SolveResult, StationarityProbe

TOOL_NAME = "fractional-herglotz"

Report = dict[str, Any]


def with_meta(report: Report, command: str, seed: int | None = None) -> Report:
    """Attach run metadata under ``meta``; nothing else in a report describes the run."""
    meta = {"tool": TOOL_NAME, "version": __version__, "command": command, "seed": seed}
    return {**report, "meta": meta}


def operator_summary(cfg: OperatorConfig) -> Report:
    kernel = cfg.kernel
    return {
        "classical": cfg.classical_mode,
        "alpha": None if cfg.classical_mode else cfg.alpha,
        "kernel": None if cfg.classical_mode or kernel is None else kernel.family.value,
        "pset": [cfg.pset.a, cfg.pset.b, cfg.pset.p, cfg.pset.q],
    }


def apply_report(cfg: OperatorConfig, op: str, result: GridFunction, output: str | None) -> Report:
    return {
        "kind": "apply",
        "operator": operator_summary(cfg),
        "op": op,
        "nodes": result.grid.n_nodes,
        "dimension": result.dim,
        "max_abs": float(np.max(np.abs(result.values))),
        "output": output,
    }


def ibp_report(cfg: OperatorConfig, result: IBPResult, n_nodes: int) -> Report:
    return {
        "kind": "ibp",
        "operator": operator_summary(cfg),
        "nodes": n_nodes,
        "lhs": result.lhs,
        "rhs": result.rhs,
        "residual": result.residual,
    }


def partials_summary(report: PartialsReport) -> Report:
    return {
        "n_probes": report.n_probes,
        "seed": report.seed,
        "errors": dict(report.errors),
        "worst_relative_error": report.worst_relative_error,
    }


def _transversality(values: dict[int, float] | None) -> dict[str, float] | None:
    if values is None:
        return None
    return {f"x_{j + 1}": v for j, v in values.items()}


def _evaluation_summary(prob: HerglotzProblem, ev: HerglotzEvaluation) -> Report:
    return {
        "lagrangian": prob.lagrangian.name,
        "operator": operator_summary(prob.op_config),
        "nodes": ev.grid.n_nodes,
        "dimension": prob.dim,
        "extremum": prob.extremum.value,
        "z_b": ev.z_b,
        "lambda_b": float(ev.lam.values[-1, 0]),
        "boundary_layer": BOUNDARY_LAYER,
    }


def solve_report(
    prob: HerglotzProblem,
    result: SolveResult,
    partials: PartialsReport,
    stationarity: StationarityProbe,
) -> Report:
    return {
        "kind": "solve",
        **_evaluation_summary(prob, result.evaluation),
        "objective_z_b": result.objective_z_b,
        "converged": result.converged,
        "status": result.status,
        "message": result.message,
        "iterations": result.iterations,
        "final_gradient_norm": result.final_gradient_norm,
        "el_residual_supnorm": [float(v) for v in result.el_residual_supnorm],
        "el_residual_core_supnorm": [float(v) for v in result.el_residual_core_supnorm],
        "transversality": _transversality(result.transversality_residuals),
        "partials": partials_summary(partials),
        "stationarity": {
            "worst_improvement": stationarity.worst_improvement,
            "worst_rate": stationarity.worst_rate,
            "tolerance": stationarity.tolerance,
            "passed": stationarity.passed,
        },
    }


def verify_report(
    prob: HerglotzProblem,
    ev: HerglotzEvaluation,
    el_supnorm: FloatArray,
    el_core_supnorm: FloatArray,
    transversality: dict[int, float] | None,
    probes: list[EndpointProbe],
    partials: PartialsReport,
    classical_supnorm: float | None,
) -> Report:
    return {
        "kind": "verify",
        **_evaluation_summary(prob, ev),
        "el_residual_supnorm": [float(v) for v in el_supnorm],
        "el_residual_core_supnorm": [float(v) for v in el_core_supnorm],
        "transversality": _transversality(transversality),
        "endpoint_probes": [
            {
                "component": f"x_{p.component + 1}",
                "delta": p.delta,
                "below": p.below,
                "center": p.center,
                "above": p.above,
                "slope": p.slope,
                "optimal": p.optimal,
            }
            for p in probes
        ],
        "classical_herglotz_supnorm": classical_supnorm,
        "partials": partials_summary(partials),
    }


def noether_report(
    prob: HerglotzProblem,
    ev: HerglotzEvaluation,
    generator: str,
    defect: float,
    result: NoetherResult,
    identity: VariationalIdentity,
) -> Report:
    return {
        "kind": "noether",
        **_evaluation_summary(prob, ev),
        "generator": generator,
        "invariance_defect": defect,
        "noether": {
            "supnorm": result.supnorm,
            "core_supnorm": result.core_supnorm,
            "integral": result.integral,
        },
        "variational_identity": {
            "lhs": identity.lhs,
            "rhs": identity.rhs,
            "defect": identity.defect,
        },
    }


def convergence_report(prob: HerglotzProblem, report: ConvergenceReport) -> Report:
    return {
        "kind": "convergence",
        "lagrangian": prob.lagrangian.name,
        "operator": operator_summary(prob.op_config),
        "nodes": report.n_nodes,
        "z_b": report.z_b,
        "z_b_differences": report.z_b_differences,
        "trajectory_differences": report.trajectory_differences,
        "el_residual_supnorms": report.el_residual_supnorms,
        "el_residual_core_supnorms": report.el_residual_core_supnorms,
        "boundary_layer": BOUNDARY_LAYER,
        "converged": report.converged,
        "observed_order": report.observed_order,
        "residuals_decreasing": report.residuals_decreasing,
        "flags": report.flags,
    }


def _fmt(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"  # type: ignore[misc]
    return str(value)


SUMMARY_FIELDS = {
    "apply": ("op", "nodes", "max_abs", "output"),
    "ibp": ("lhs", "rhs", "residual"),
    "solve": (
        "z_b",
        "converged",
        "iterations",
        "final_gradient_norm",
        "el_residual_supnorm",
        "el_residual_core_supnorm",
        "transversality",
    ),
    "verify": (
        "z_b",
        "el_residual_supnorm",
        "el_residual_core_supnorm",
        "transversality",
        "classical_herglotz_supnorm",
    ),
    "noether": ("generator", "invariance_defect", "noether", "variational_identity"),
    "convergence": (
        "nodes",
        "z_b",
        "observed_order",
        "el_residual_supnorms",
        "el_residual_core_supnorms",
        "flags",
    ),
    "oscillator": ("classical_z_b", "max_successive_difference", "distances_decreasing"),
}


def summary_rows(report: Report) -> list[tuple[str, str]]:
    """Key/value pairs shown by the console table for a report."""
    rows: list[tuple[str, str]] = []
    for key in SUMMARY_FIELDS.get(report.get("kind", ""), ()):
        value = report.get(key)
        if isinstance(value, dict):
            for sub, v in value.items():  # type: ignore[misc]
                rows.append((f"{key}.{sub}", _fmt(v)))
        else:
            rows.append((key, _fmt(value)))
    return rows


def row_label(alpha: float | None) -> str:
    return "classical" if alpha is None else f"alpha={alpha:g}"


def sweep_row(row: SweepRow, trajectory_file: str | None) -> Report:
    return {
        "alpha": row.alpha,
        "z_b": row.z_b,
        "converged": row.converged,
        "el_residual_supnorm": row.el_residual_supnorm,
        "el_residual_core_supnorm": row.el_residual_core_supnorm,
        "distance_to_classical": row.distance_to_classical,
        "trajectory": trajectory_file,
        "error": row.error,
    }


def oscillator_report(
    p: OscillatorParams,
    table: SweepTable,
    files: dict[str, str],
    residual_discrepancy: float | None = None,
) -> Report:
    """Sweep (or single run) summary; ``files`` maps a row label to its CSV name."""
    classical = table.classical
    entries = [r for r in [classical, *table.rows] if r is not None and r.error is None]
    return {
        "kind": "oscillator",
        "converged": [r.converged for r in entries],
        "el_residual_supnorm": [r.el_residual_supnorm for r in entries],
        "el_residual_core_supnorm": [r.el_residual_core_supnorm for r in entries],
        "boundary_layer": BOUNDARY_LAYER,
        "params": {
            "m": p.m,
            "k": p.k,
            "lambda0": p.lambda0,
            "b": p.b,
            "x0": p.x0,
            "xb": p.xb,
            "z0": p.z0,
        },
        "classical": None if classical is None else sweep_row(classical, files.get("classical")),
        "classical_z_b": None if classical is None else classical.z_b,
        "runs": [sweep_row(r, files.get(row_label(r.alpha))) for r in table.rows],
        "max_successive_difference": table.max_successive_difference,
        "distances_decreasing": table.distances_decreasing if len(table.rows) > 1 else None,
        "residual_discrepancy": residual_discrepancy,
    }
