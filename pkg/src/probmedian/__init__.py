"""Approximation solvers for the set median problem and its probabilistic
applications: smallest enclosing ball over uncertain points and kernelized
support vector data description."""

from .geometry import (
    DimensionMismatchError,
    SetFamily,
    max_distance,
    objective,
    set_metric,
)
from .setmedian import (
    PAPER,
    PRACTICAL,
    CandidateCollector,
    RadiusEstimate,
    SolveResult,
    SolverConfig,
    Subgradient,
    estimate_radius,
    exact_subgradient,
    pick_initial_center,
    select_best_candidate,
    sgd_run,
    solve_set_median,
    stochastic_subgradient,
)
from .probseb import (
    DiscreteDistribution,
    ProbInstance,
    SamplingBudgetError,
    expected_cost,
    presence_mass,
    sample_locations_weighted,
    sample_nonempty_realizations,
    solve_pseb,
)
from .kernels import (
    ImplicitCenter,
    Kernel,
    implicit_distance,
    implicit_update,
    kernel_eval,
    solve_psvdd,
)
from .coreset import Ball, approx_furthest, approx_meb
from .oracle import oracle_pseb, oracle_set_median

__all__ = [
    "DimensionMismatchError",
    "SetFamily",
    "max_distance",
    "set_metric",
    "objective",
    "PAPER",
    "PRACTICAL",
    "SolverConfig",
    "Subgradient",
    "RadiusEstimate",
    "SolveResult",
    "CandidateCollector",
    "exact_subgradient",
    "stochastic_subgradient",
    "pick_initial_center",
    "estimate_radius",
    "sgd_run",
    "select_best_candidate",
    "solve_set_median",
    "DiscreteDistribution",
    "ProbInstance",
    "SamplingBudgetError",
    "presence_mass",
    "sample_locations_weighted",
    "sample_nonempty_realizations",
    "expected_cost",
    "solve_pseb",
    "Kernel",
    "ImplicitCenter",
    "kernel_eval",
    "implicit_distance",
    "implicit_update",
    "solve_psvdd",
    "Ball",
    "approx_meb",
    "approx_furthest",
    "oracle_set_median",
    "oracle_pseb",
]

__version__ = "0.1.0"
