"""Competing-risks estimators for incident coding."""

from .aalen_johansen import (
    CifCurve,
    CumulativeIncidence,
    EmptyRiskSetError,
    EventTable,
    UndefinedHazardError,
    build_event_table,
    cumulative_incidence,
    event_specific_hazard,
    event_table,
)
from .coding import deci_dagger, epsilon_hat, persistence
from .rmtl import (
    Estimate,
    GridMismatchError,
    RMTLContrast,
    diagnostics,
    omega_hat,
    psi_hat,
    psi_m_hat,
    psi_star_hat,
    rmtl,
    rmtl_covariance,
    rmtl_weights,
)

__all__ = [
    "CifCurve",
    "CumulativeIncidence",
    "EmptyRiskSetError",
    "Estimate",
    "EventTable",
    "GridMismatchError",
    "RMTLContrast",
    "UndefinedHazardError",
    "build_event_table",
    "cumulative_incidence",
    "deci_dagger",
    "diagnostics",
    "epsilon_hat",
    "event_specific_hazard",
    "event_table",
    "omega_hat",
    "persistence",
    "psi_hat",
    "psi_m_hat",
    "psi_star_hat",
    "rmtl",
    "rmtl_covariance",
    "rmtl_weights",
]
