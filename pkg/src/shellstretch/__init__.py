"""Polymer stretching by shell-localized transport noise.

Lattice noise ensembles and their correctors, the limiting covariances,
Monte Carlo for the pre-limit and limit dumbbell SDEs, a radial
Fokker-Planck solver and heavy-tail diagnostics.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .covariance import (
    LimitParams,
    NonNormalizableError,
    StationaryDensity,
    analytic_A,
    analytic_Q,
    covariance_convergence,
    tail_exponent,
    turbulent_kT,
)
from .lagrangian_mc import (
    EnsembleStats,
    IntegrationBlowup,
    SimParams,
    StepRejected,
    VelocityField,
    moment_ode_solve,
    run_ensemble,
)
from .radial_fp import CFLViolation, RadialField, default_grid, fp_distance_to_stationary, fp_radial_evolve
from .shell_noise import InvalidParameterError, NoiseModel, alpha_N, enumerate_shell, stretching_covariance_sum
from .tail_stats import TailFit, ccdf, hill_fit

__all__ = [
    "CFLViolation",
    "EnsembleStats",
    "IntegrationBlowup",
    "InvalidParameterError",
    "LimitParams",
    "NoiseModel",
    "NonNormalizableError",
    "RadialField",
    "SimParams",
    "StationaryDensity",
    "StepRejected",
    "TailFit",
    "VelocityField",
    "alpha_N",
    "analytic_A",
    "analytic_Q",
    "ccdf",
    "covariance_convergence",
    "default_grid",
    "enumerate_shell",
    "fp_distance_to_stationary",
    "fp_radial_evolve",
    "hill_fit",
    "moment_ode_solve",
    "run_ensemble",
    "stretching_covariance_sum",
    "tail_exponent",
    "turbulent_kT",
]
