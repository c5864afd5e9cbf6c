"""Tests for rule-based verification findings."""

from typing import Any

import pytest

from fractional_herglotz.checks import (
    evaluate_findings,
    findings_payload,
    rule_convergence,
    rule_el_residual,
    rule_endpoint_probe,
    rule_ibp,
    rule_noether,
    rule_solver_converged,
    rule_transversality,
    rule_variational_identity,
)


@pytest.fixture
def clean_solve() -> dict[str, Any]:
    """A converged solve report with small residuals."""
    return {
        "kind": "solve",
        "converged": True,
        "el_residual_supnorm": [1e-6, 2e-6],
        "transversality": {"0": 1e-7},
        "endpoint_probes": [
            {"component": 0, "delta": 1e-4, "below": 1.0, "center": 0.9, "above": 1.1}
        ],
    }


def test_clean_report_has_no_findings(clean_solve: dict[str, Any]) -> None:
    """Nothing fires below the threshold."""
    assert evaluate_findings(clean_solve, 1e-3) == []


def test_el_residual_rule(clean_solve: dict[str, Any]) -> None:
    """The largest component counts."""
    finding = rule_el_residual(clean_solve, 1e-6)
    assert finding is not None
    assert finding.value == 2e-6
    assert finding.category == "verification"
    assert rule_el_residual({}, 1e-6) is None


def test_transversality_rule(clean_solve: dict[str, Any]) -> None:
    """Dict-valued residuals are reduced by absolute value."""
    clean_solve["transversality"] = {"0": -0.5, "1": None}
    finding = rule_transversality(clean_solve, 1e-3)
    assert finding is not None
    assert finding.value == 0.5


def test_endpoint_probe_rule(clean_solve: dict[str, Any]) -> None:
    """An endpoint move that lowers the objective is reported."""
    assert rule_endpoint_probe(clean_solve, 1e-3) is None
    clean_solve["endpoint_probes"][0]["above"] = 0.8
    finding = rule_endpoint_probe(clean_solve, 1e-3)
    assert finding is not None
    assert finding.value == pytest.approx(0.1)


def test_noether_and_identity_rules() -> None:
    """Both read their own nested blocks."""
    report = {"noether": {"supnorm": -0.2}, "variational_identity": {"defect": 0.3}}
    noether = rule_noether(report, 0.1)
    identity = rule_variational_identity(report, 0.1)
    assert noether is not None and noether.value == 0.2
    assert identity is not None and identity.value == 0.3
    assert rule_noether({}, 0.1) is None
    assert rule_variational_identity({}, 0.1) is None


def test_ibp_rule_only_applies_to_ibp_reports() -> None:
    """Other report kinds with a residual key are ignored."""
    assert rule_ibp({"kind": "ibp", "residual": 0.01}, 1e-3) is not None
    assert rule_ibp({"kind": "apply", "residual": 0.01}, 1e-3) is None


def test_convergence_rule() -> None:
    """Finest-level residual first, then the refinement flag."""
    report: dict[str, Any] = {
        "kind": "convergence",
        "el_residual_supnorms": [1e-2, 1e-3],
        "flags": [],
    }
    assert rule_convergence(report, 1e-2) is None
    finding = rule_convergence(report, 1e-4)
    assert finding is not None
    assert finding.value == 1e-3
    report["flags"] = ["el_residual_not_decreasing"]
    flagged = rule_convergence(report, 1.0)
    assert flagged is not None
    assert flagged.value is None


def test_residual_rules_read_the_core_view() -> None:
    """When a report carries core residuals, thresholds apply to them."""
    solve = {
        "kind": "solve",
        "el_residual_supnorm": [5.0],
        "el_residual_core_supnorm": [1e-4],
    }
    assert rule_el_residual(solve, 1e-3) is None
    solve["el_residual_core_supnorm"] = [2e-3]
    finding = rule_el_residual(solve, 1e-3)
    assert finding is not None and finding.value == 2e-3

    assert rule_noether({"noether": {"supnorm": 5.0, "core_supnorm": 1e-4}}, 1e-3) is None

    convergence: dict[str, Any] = {
        "kind": "convergence",
        "el_residual_supnorms": [10.0, 20.0],
        "el_residual_core_supnorms": [1e-3, 5e-4],
        "flags": [],
    }
    assert rule_convergence(convergence, 1e-3) is None


def test_solver_rule_handles_lists() -> None:
    """A single non-converged level is enough."""
    assert rule_solver_converged({"converged": [True, False]}, 1.0) is not None
    assert rule_solver_converged({"converged": [True, True]}, 1.0) is None
    finding = rule_solver_converged({"converged": False, "message": "iteration limit"}, 1.0)
    assert finding is not None
    assert finding.category == "numerical"
    assert "iteration limit" in finding.observation


def test_numerical_findings_come_first() -> None:
    """Ordering puts solver failures ahead of verification findings."""
    report = {"kind": "solve", "converged": False, "el_residual_supnorm": [1.0]}
    findings = evaluate_findings(report, 1e-3)
    assert [f.rule_id for f in findings] == ["solver_converged", "el_residual"]
    payload = findings_payload(findings)
    assert payload[0]["category"] == "numerical"
    assert set(payload[1]) == {"rule_id", "category", "observation", "value", "threshold"}
