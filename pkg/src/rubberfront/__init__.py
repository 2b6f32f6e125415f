"""Simulation engine for diffusant uptake with a kinetically driven front.

The package solves, on a fixed computational domain, the one-dimensional
diffusion problem whose right endpoint advances at a rate proportional to
the positive part of the concentration there, checks the discrete
counterparts of the model's structural properties (value bounds, front
monotonicity, the linear growth envelope, energy boundedness), and ships
analysis helpers for convergence orders, long-horizon front growth and
rate-coefficient calibration.
"""

from .model import (
    BoundaryDriver,
    InitialProfile,
    InvalidSpecError,
    ProblemSpec,
    Violation,
    check_admissibility,
    energy,
    positive_part,
)
from .domain import (
    Grid,
    PhysicalField,
    TransformedState,
    initial_transformed,
    to_fixed_domain,
    to_physical,
    trapezoid_mass,
)
from .solver import (
    SolveReport,
    SolverConfig,
    StepDiagnostics,
    StepRejected,
    front_speed,
    run,
    step,
    suggest_dt,
)
from .diagnostics import (
    BracketError,
    CalibrationResult,
    PowerLawFit,
    RefinementError,
    calibrate_a0,
    contraction_dt,
    fit_power_law,
    golden_section_log,
    richardson_orders,
    spatial_order,
    stationary_residual,
    temporal_order,
)
from .config import ConfigError, RunManifest, parse_config

__version__ = "0.1.0"

__all__ = [
    "BoundaryDriver",
    "InitialProfile",
    "InvalidSpecError",
    "ProblemSpec",
    "Violation",
    "check_admissibility",
    "energy",
    "positive_part",
    "Grid",
    "PhysicalField",
    "TransformedState",
    "initial_transformed",
    "to_fixed_domain",
    "to_physical",
    "trapezoid_mass",
    "SolveReport",
    "SolverConfig",
    "StepDiagnostics",
    "StepRejected",
    "front_speed",
    "run",
    "step",
    "suggest_dt",
    "BracketError",
    "CalibrationResult",
    "PowerLawFit",
    "RefinementError",
    "calibrate_a0",
    "contraction_dt",
    "fit_power_law",
    "golden_section_log",
    "richardson_orders",
    "spatial_order",
    "stationary_residual",
    "temporal_order",
    "ConfigError",
    "RunManifest",
    "parse_config",
]
