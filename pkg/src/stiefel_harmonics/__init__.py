"""Common harmonic waves of a cohort of brain networks, learned on the Stiefel manifold."""
from .analysis import (
    EnergySpectrum,
    GroupTestResult,
    NodeSignal,
    energy_spectrum,
    group_energy_analysis,
    positive_negative_protocol,
    replicability_test,
    split_power,
)
from .graph import (
    EigenSystem,
    Laplacian,
    ShiftedLaplacian,
    build_laplacian,
    eigensystem,
    reconstruction_error_curve,
    shift_positive_definite,
    suggest_p,
)
from .solver import (
    HarmonicModel,
    SolverConfig,
    arithmetic_mean_harmonics,
    gpi_refine,
    learn_common_harmonics,
    objective_cost,
    pseudo_mean_harmonics,
    weiszfeld_mean,
)
from .stiefel import exp_map, expm_small, project_to_tangent, squared_distance, validate_on_manifold

__version__ = "0.1.0"

__all__ = [
    "EigenSystem",
    "EnergySpectrum",
    "GroupTestResult",
    "HarmonicModel",
    "Laplacian",
    "NodeSignal",
    "ShiftedLaplacian",
    "SolverConfig",
    "arithmetic_mean_harmonics",
    "build_laplacian",
    "eigensystem",
    "energy_spectrum",
    "exp_map",
    "expm_small",
    "gpi_refine",
    "group_energy_analysis",
    "learn_common_harmonics",
    "networks",
    "objective_cost",
    "positive_negative_protocol",
    "project_to_tangent",
    "pseudo_mean_harmonics",
    "reconstruction_error_curve",
    "replicability_test",
    "shift_positive_definite",
    "split_power",
    "squared_distance",
    "suggest_p",
    "validate_on_manifold",
    "weiszfeld_mean",
]
