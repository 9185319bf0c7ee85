"""Experiment harness: targets, sweeps, stability runs and reports."""

from .report import ErrorReport, ReportRow, emit_report, read_report_csv
from .runs import (
    RunConfig,
    check_hypothesis,
    run_convergence,
    run_logfactor_probe,
    run_quasi_rate,
    run_stability,
)
from .targets import TargetFunction, by_name

__all__ = [
    "ErrorReport",
    "ReportRow",
    "RunConfig",
    "TargetFunction",
    "by_name",
    "check_hypothesis",
    "emit_report",
    "read_report_csv",
    "run_convergence",
    "run_logfactor_probe",
    "run_quasi_rate",
    "run_stability",
]
