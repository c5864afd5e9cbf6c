"""Tests for report payloads and console summaries."""

from fractional_herglotz import __version__
from fractional_herglotz.applications import OscillatorParams, SweepRow, SweepTable
from fractional_herglotz.kernels import ParameterSet
from fractional_herglotz.operators import IBPResult, OperatorConfig
from fractional_herglotz.reports import (
    TOOL_NAME,
    ibp_report,
    operator_summary,
    oscillator_report,
    row_label,
    summary_rows,
    with_meta,
)


def test_with_meta_keeps_payload() -> None:
    """Metadata goes under its own key."""
    report = with_meta({"kind": "solve", "z_b": 1.0}, "solve", seed=7)
    assert report["z_b"] == 1.0
    assert report["meta"] == {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": "solve",
        "seed": 7,
    }


def test_operator_summary() -> None:
    """Classical operators have no order or kernel."""
    pset = ParameterSet(0, 1, 1, 0)
    assert operator_summary(OperatorConfig.classical(pset)) == {
        "classical": True,
        "alpha": None,
        "kernel": None,
        "pset": [0, 1, 1, 0],
    }
    fractional = operator_summary(OperatorConfig.caputo(0.5, pset))
    assert fractional["alpha"] == 0.5
    assert fractional["kernel"] == "power_law"


def test_ibp_summary_rows() -> None:
    """The console table lists the identity's two sides and the residual."""
    cfg = OperatorConfig.caputo(0.5, ParameterSet(0, 1, 1, 0))
    report = ibp_report(cfg, IBPResult(lhs=1.0, rhs=0.5, residual=0.25), 101)
    assert report["kind"] == "ibp"
    assert summary_rows(report) == [("lhs", "1"), ("rhs", "0.5"), ("residual", "0.25")]


def test_summary_rows_flatten_dicts() -> None:
    """Nested values get dotted keys; missing values show as n/a."""
    report = {
        "kind": "noether",
        "generator": "translation[0]",
        "noether": {"supnorm": 0.125, "integral": None},
    }
    rows = dict(summary_rows(report))
    assert rows["generator"] == "translation[0]"
    assert rows["noether.supnorm"] == "0.125"
    assert rows["noether.integral"] == "n/a"
    assert rows["invariance_defect"] == "n/a"
    assert summary_rows({"kind": "unknown"}) == []


def test_row_label() -> None:
    assert row_label(None) == "classical"
    assert row_label(0.95) == "alpha=0.95"


def test_oscillator_report() -> None:
    """Failed rows stay in runs but not in the residual lists."""
    p = OscillatorParams(m=1.0, k=1.0, lambda0=0.0, b=1.0, x0=1.0, xb=0.5)
    table = SweepTable(
        rows=[
            SweepRow(
                alpha=0.9,
                z_b=0.3,
                converged=True,
                el_residual_supnorm=1e-4,
                el_residual_core_supnorm=5e-5,
            ),
            SweepRow(alpha=0.95, error="objective is not finite"),
        ],
        classical=SweepRow(alpha=None, z_b=0.2, converged=True, el_residual_supnorm=1e-5),
    )
    report = oscillator_report(p, table, {"alpha=0.9": "alpha=0.9.csv"})
    assert report["classical_z_b"] == 0.2
    assert report["converged"] == [True, True]
    assert report["el_residual_supnorm"] == [1e-5, 1e-4]
    assert report["el_residual_core_supnorm"] == [None, 5e-5]
    assert report["runs"][0]["el_residual_core_supnorm"] == 5e-5
    assert report["boundary_layer"] == 0.05
    assert [run["trajectory"] for run in report["runs"]] == ["alpha=0.9.csv", None]
    assert report["runs"][1]["error"] == "objective is not finite"
    assert report["distances_decreasing"] is False
    assert report["params"]["xb"] == 0.5
