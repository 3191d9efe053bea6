"""Benchmark harness: seeded trials, report files and the ``bench`` command."""

from .runner import PRESETS, ConfigError, RunConfig, load_config, run_config
from .report import COLUMNS, compare_reports, read_report, write_report

__all__ = [
    "PRESETS",
    "COLUMNS",
    "ConfigError",
    "RunConfig",
    "load_config",
    "run_config",
    "compare_reports",
    "read_report",
    "write_report",
]
