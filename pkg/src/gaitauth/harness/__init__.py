"""Experiment harness: config files, the run matrix, and the CLI."""

from .config import (ConfigError, DatasetConfig, ExperimentConfig, derive_seed,
                     load_config, parse_config, VARIANTS)
from .experiment import (CellResult, RunRecord, emit_summary,
                         regenerate_summary, run_experiment, REPORT_FIELDS)

__all__ = [
    "CellResult",
    "ConfigError",
    "DatasetConfig",
    "ExperimentConfig",
    "REPORT_FIELDS",
    "RunRecord",
    "VARIANTS",
    "derive_seed",
    "emit_summary",
    "load_config",
    "parse_config",
    "regenerate_summary",
    "run_experiment",
]
