"""Experiment orchestration: config-driven sweeps with deterministic seeding."""

from .config import ExperimentConfig, ConfigError, default_config, load_config
from .experiments import (
    RunRecord,
    run_breakeven,
    run_erasure_scan,
    run_experiment,
    run_fig3_sweep,
    run_kl_report,
    run_phase_sweep,
    run_tomo_calibration,
)

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "default_config",
    "load_config",
    "RunRecord",
    "run_experiment",
    "run_fig3_sweep",
    "run_phase_sweep",
    "run_breakeven",
    "run_erasure_scan",
    "run_kl_report",
    "run_tomo_calibration",
]
