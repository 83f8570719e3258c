"""Experiment configuration, Monte-Carlo drivers, output files and the CLI."""

from .config import METHODS, ExperimentConfig, default_weights, load_config, worker_count
from .experiments import RAW_COLUMNS, SweepRecord, run_decompose, run_pareto, run_sumrate_vs_snr
from .output import emit_outputs, read_raw_csv

__all__ = [
    "ExperimentConfig",
    "METHODS",
    "RAW_COLUMNS",
    "SweepRecord",
    "default_weights",
    "emit_outputs",
    "load_config",
    "read_raw_csv",
    "run_decompose",
    "run_pareto",
    "run_sumrate_vs_snr",
    "worker_count",
]
