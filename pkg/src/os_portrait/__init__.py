"""Spectra of the model operator i eps y'' + q(x) y on [-1, 1] with a quadratic
profile q, the limit graph their eigenvalues concentrate on, and the counting
laws along it."""

from .profile import QuadraticProfile, TurningPair, critical_lambdas, evaluate, range_on_interval, turning_points
from .discretize import DiscretizedOperator, Scheme, apply, build, build_chebyshev, build_finite_difference
from .eigensolve import EigenPair, Spectrum, compute_spectrum, filter_spurious, residual
from .action import (
    ActionValue,
    PathSpec,
    action_between_turning_points,
    closed_form_action_oracle,
    integrate_action,
)
from .graph import (
    CountingLaw,
    CurveCondition,
    LimitCurve,
    LimitGraph,
    assemble_graph,
    assemble_from_registry,
    condition_value,
    load_registry,
    predicted_count,
    trace_curve,
)
from .portrait import (
    ConcentrationStats,
    CountingReport,
    SweepConfig,
    counting_report,
    distance_to_graph,
    empirical_count,
    run_sweep,
    track_trajectories,
)

__version__ = "0.1.0"

__all__ = [
    "QuadraticProfile",
    "TurningPair",
    "critical_lambdas",
    "evaluate",
    "range_on_interval",
    "turning_points",
    "DiscretizedOperator",
    "Scheme",
    "apply",
    "build",
    "build_chebyshev",
    "build_finite_difference",
    "EigenPair",
    "Spectrum",
    "compute_spectrum",
    "filter_spurious",
    "residual",
    "ActionValue",
    "PathSpec",
    "action_between_turning_points",
    "closed_form_action_oracle",
    "integrate_action",
    "CountingLaw",
    "CurveCondition",
    "LimitCurve",
    "LimitGraph",
    "assemble_graph",
    "assemble_from_registry",
    "condition_value",
    "load_registry",
    "predicted_count",
    "trace_curve",
    "ConcentrationStats",
    "CountingReport",
    "SweepConfig",
    "counting_report",
    "distance_to_graph",
    "empirical_count",
    "run_sweep",
    "track_trajectories",
]
