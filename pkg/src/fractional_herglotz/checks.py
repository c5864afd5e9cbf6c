"""Rule-based verification findings over report payloads."""

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

Report = dict[str, Any]


@dataclass
class Finding:
    """One failed check."""

    rule_id: str  # "el_residual", "transversality", ...
    category: str  # "verification" or "numerical"
    observation: str
    value: float | None = None
    threshold: float | None = None


def _largest(values: Any) -> float | None:
    if values is None:
        return None
    if isinstance(values, dict):
        values = list(values.values())  # type: ignore[misc]
    if not isinstance(values, list):
        values = [values]
    numbers = [abs(float(v)) for v in values if v is not None]  # type: ignore[misc]
    return max(numbers) if numbers else None


def _core_or_full(report: Report, core_key: str, full_key: str) -> Any:
    """The core view of a residual when the report carries one, else the full view."""
    core = report.get(core_key)
    return core if core is not None else report.get(full_key)


def rule_el_residual(report: Report, threshold: float) -> Finding | None:
    """Euler-Lagrange residual sup-norm (core view) above the threshold."""
    worst = _largest(_core_or_full(report, "el_residual_core_supnorm", "el_residual_supnorm"))
    if worst is not None and worst > threshold:
        return Finding(
            rule_id="el_residual",
            category="verification",
            observation=f"Euler-Lagrange residual {worst:.3e} exceeds {threshold:.3e}",
            value=worst,
            threshold=threshold,
        )
    return None


def rule_transversality(report: Report, threshold: float) -> Finding | None:
    worst = _largest(report.get("transversality"))
    if worst is not None and worst > threshold:
        return Finding(
            rule_id="transversality",
            category="verification",
            observation=f"transversality residual {worst:.3e} exceeds {threshold:.3e}",
            value=worst,
            threshold=threshold,
        )
    return None


def rule_endpoint_probe(report: Report, threshold: float) -> Finding | None:
    """A free endpoint that can still be moved to improve the objective."""
    for probe in report.get("endpoint_probes", []):
        improvement = probe["center"] - min(probe["below"], probe["above"])
        if improvement > threshold * probe["delta"]:
            return Finding(
                rule_id="endpoint_probe",
                category="verification",
                observation=(
                    f"moving {probe['component']}(b) by {probe['delta']:g} "
                    f"improves the objective by {improvement:.3e}"
                ),
                value=improvement,
                threshold=threshold,
            )
    return None


def rule_noether(report: Report, threshold: float) -> Finding | None:
    noether = report.get("noether")
    if not noether:
        return None
    worst = abs(float(_core_or_full(noether, "core_supnorm", "supnorm")))
    if worst > threshold:
        return Finding(
            rule_id="noether",
            category="verification",
            observation=f"Noether residual {worst:.3e} exceeds {threshold:.3e}",
            value=worst,
            threshold=threshold,
        )
    return None


def rule_variational_identity(report: Report, threshold: float) -> Finding | None:
    identity = report.get("variational_identity")
    if not identity:
        return None
    defect = float(identity["defect"])
    if defect > threshold:
        return Finding(
            rule_id="variational_identity",
            category="verification",
            observation=f"variational identity defect {defect:.3e} exceeds {threshold:.3e}",
            value=defect,
            threshold=threshold,
        )
    return None


def rule_ibp(report: Report, threshold: float) -> Finding | None:
    if report.get("kind") != "ibp":
        return None
    residual = float(report["residual"])
    if residual > threshold:
        return Finding(
            rule_id="ibp",
            category="verification",
            observation=f"integration by parts residual {residual:.3e} exceeds {threshold:.3e}",
            value=residual,
            threshold=threshold,
        )
    return None


def rule_convergence(report: Report, threshold: float) -> Finding | None:
    """Finest-level residual above the threshold, or residuals growing under refinement."""
    if report.get("kind") != "convergence":
        return None
    residuals = _core_or_full(report, "el_residual_core_supnorms", "el_residual_supnorms") or []
    if residuals and residuals[-1] > threshold:
        return Finding(
            rule_id="convergence",
            category="verification",
            observation=f"finest-grid residual {residuals[-1]:.3e} exceeds {threshold:.3e}",
            value=float(residuals[-1]),
            threshold=threshold,
        )
    if "el_residual_not_decreasing" in report.get("flags", []):
        return Finding(
            rule_id="convergence",
            category="verification",
            observation="Euler-Lagrange residual does not decrease under refinement",
        )
    return None


def rule_solver_converged(report: Report, threshold: float) -> Finding | None:
    converged = report.get("converged")
    if isinstance(converged, list):
        converged = all(converged)  # type: ignore[arg-type]
    if converged is False:
        return Finding(
            rule_id="solver_converged",
            category="numerical",
            observation=f"solver did not converge ({report.get('message', 'see report')})",
        )
    return None


RULES: list[Callable[[Report, float], Finding | None]] = [
    rule_solver_converged,
    rule_el_residual,
    rule_transversality,
    rule_endpoint_probe,
    rule_noether,
    rule_variational_identity,
    rule_ibp,
    rule_convergence,
]


def evaluate_findings(report: Report, fail_above: float) -> list[Finding]:
    """Apply every rule; numerical findings come first.

    Example:
        >>> evaluate_findings({"kind": "ibp", "residual": 0.5}, 1e-3)[0].rule_id
        'ibp'
    """
    findings = [f for rule in RULES if (f := rule(report, fail_above)) is not None]
    order = {"numerical": 0, "verification": 1}
    findings.sort(key=lambda f: order.get(f.category, 2))
    return findings


def findings_payload(findings: list[Finding]) -> list[Report]:
    return [
        {
            "rule_id": f.rule_id,
            "category": f.category,
            "observation": f.observation,
            "value": f.value,
            "threshold": f.threshold,
        }
        for f in findings
    ]
