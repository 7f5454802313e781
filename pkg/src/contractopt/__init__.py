"""Optimal incentive contracts for delegated design work.

A principal assigns design tasks to self-interested engineers whose effort
is unobservable (and whose type may be private), pays them through simple
threshold-plus-incentive transfer functions, and picks the transfer
parameters that maximize the expected system-level utility subject to
participation and truth-telling constraints. This package provides the
closed-form model pieces, the noise quadrature, the agent best-response
solver, the penalized SMC-annealing outer optimizer, calibration from
historical data, and case-study analytics, plus a CLI.
"""

__version__ = "0.1.0"

from .model import (
    AgentSpec,
    AgentTypeSpec,
    ContractParams,
    ProblemSpec,
    RiskAttitude,
    Scenario,
    SmoothingSpec,
    UtilitySpec,
    ValueKind,
    ValueSpec,
    agent_payoff,
    cost,
    quality,
    smooth_heaviside,
    system_value,
    transfer,
    utility,
)
from .quadrature import QuadratureRule, default_rule, expect, gauss_hermite_1d, sparse_grid
from .best_response import (
    BestResponse,
    InnerSolverConfig,
    best_response,
    expected_agent_utility,
)
from .optimizer import (
    AnnealerConfig,
    ConstraintReport,
    SolveResult,
    SolverError,
    best_of_seeds,
    optimize,
    penalized_objective,
    principal_objective,
    solve_seeds,
    verify_solution,
)
from .calibration import (
    CalibrationInputs,
    CalibrationResult,
    HistoricalSeries,
    LinearTrendFit,
    bundled_series,
    derive_model_params,
    effort_from_investment,
    fit_linear_model,
    scaled_quality,
    to_problem_spec,
)
from .analysis import (
    ExceedanceCurve,
    SweepResult,
    UtilityTable,
    exceedance,
    single_type_problem,
    sweep,
    utility_table,
)

__all__ = [name for name in dir() if not name.startswith("_")]
