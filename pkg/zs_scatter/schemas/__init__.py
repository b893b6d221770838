"""Schemas package for experiment configuration and report models."""

from .experiment import (
    DEFAULT_NODES,
    REPORT_COLUMNS,
    ExperimentCommand,
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    rows_to_frame,
)

__all__ = [
    "DEFAULT_NODES",
    "REPORT_COLUMNS",
    "ExperimentCommand",
    "ExperimentConfig",
    "ExperimentReport",
    "ReportRow",
    "rows_to_frame",
]
