"""Simulation study orchestration."""

from .config import ConfigError, ScenarioConfig, default_reference_events, load_config
from .runner import (
    ESTIMATE_COLUMNS,
    RESULT_COLUMNS,
    SUMMARY_COLUMNS,
    ScenarioError,
    aggregate,
    emit_plot_data,
    estimate_cohorts,
    run_cell,
    run_scenario,
    simulate_cell,
)

__all__ = [
    "ConfigError",
    "ESTIMATE_COLUMNS",
    "RESULT_COLUMNS",
    "SUMMARY_COLUMNS",
    "ScenarioConfig",
    "ScenarioError",
    "aggregate",
    "default_reference_events",
    "emit_plot_data",
    "estimate_cohorts",
    "load_config",
    "run_cell",
    "run_scenario",
    "simulate_cell",
]
