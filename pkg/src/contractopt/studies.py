"""Bundled case studies: the moral-hazard parameter grid, the two
adverse-selection scenarios, and the satellite propulsion calibration.

These are the scenarios shipped as example problem documents and rerun by
the `reproduce-paper` command; expected outputs for them are frozen in the
acceptance test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import single_type_problem
from .calibration import CalibrationInputs, bundled_series
from .model import (
    AgentSpec,
    AgentTypeSpec,
    ProblemSpec,
    RiskAttitude,
    Scenario,
    UtilitySpec,
    ValueKind,
    ValueSpec,
)

# Case-study parameter levels: task complexity falls as kappa rises.
KAPPA_LEVELS = {"low_complexity": 2.5, "high_complexity": 1.5}
COST_LEVELS = {"low_cost": 0.1, "high_cost": 0.4}
SIGMA_LEVELS = {"low_uncertainty": 0.1, "high_uncertainty": 0.4}


@dataclass(frozen=True)
class CaseStudy:
    name: str
    problem: ProblemSpec


def moral_hazard_grid(value_kind: ValueKind) -> list[CaseStudy]:
    """All eight complexity/cost/uncertainty combinations for one value kind."""
    cases = []
    for cost_name, cost in COST_LEVELS.items():
        for kappa_name, kappa in KAPPA_LEVELS.items():
            for sigma_name, sigma in SIGMA_LEVELS.items():
                name = f"{value_kind.value.lower()}_k{kappa}_c{cost}_s{sigma}"
                cases.append(
                    CaseStudy(name, single_type_problem(kappa, sigma, cost, value_kind))
                )
    return cases


def two_type_problem(
    type_a: AgentTypeSpec,
    type_b: AgentTypeSpec,
    value_kind: ValueKind = ValueKind.RB,
) -> ProblemSpec:
    agent = AgentSpec(types=(type_a, type_b), risk_attitude=RiskAttitude.RISK_AVERSE)
    return ProblemSpec(
        agents=(agent,),
        value=ValueSpec(kind=value_kind),
        principal_utility=UtilitySpec(kind=RiskAttitude.RISK_NEUTRAL),
        scenario=Scenario.TYPE_DEPENDENT,
    )


def unknown_cost_problem() -> ProblemSpec:
    """Screening scenario: two equally likely effort-cost levels, known
    complexity and uncertainty."""
    return two_type_problem(
        AgentTypeSpec(kappa=1.5, cost_coeff=0.1, sigma=0.1, prior_prob=0.5),
        AgentTypeSpec(kappa=1.5, cost_coeff=0.4, sigma=0.1, prior_prob=0.5),
    )


def unknown_complexity_problem() -> ProblemSpec:
    """Screening scenario: two equally likely complexity levels, known cost
    and uncertainty."""
    return two_type_problem(
        AgentTypeSpec(kappa=2.5, cost_coeff=0.4, sigma=0.4, prior_prob=0.5),
        AgentTypeSpec(kappa=1.5, cost_coeff=0.4, sigma=0.4, prior_prob=0.5),
    )


def adverse_selection_cases() -> list[CaseStudy]:
    return [
        CaseStudy("adverse_selection_unknown_cost", unknown_cost_problem()),
        CaseStudy("adverse_selection_unknown_complexity", unknown_complexity_problem()),
    ]


def satellite_inputs() -> list[CalibrationInputs]:
    """The two propulsion case-study parameterizations: requirement and
    system value differ, staffing and rates are shared. Currency in
    millions of USD; the engineer cost rate is 0.12 M USD per year."""
    common = dict(
        state_of_art_performance=252.0,
        state_of_art_investment=149.1,
        engineer_cost_rate=0.12,
        horizon=1.0,
        engineer_count=200,
    )
    return [
        CalibrationInputs(requirement_physical=252.2, system_value=50.0, **common),
        CalibrationInputs(requirement_physical=252.25, system_value=60.0, **common),
    ]


def satellite_cases() -> list[CaseStudy]:
    """Ready-to-solve problems for the two published satellite rows, using
    the rounded parameters as printed: (1.6, 0.6, 0.5) and (1.28, 0.48, 0.4)."""
    rows = [(1.6, 0.6, 0.5), (1.28, 0.48, 0.4)]
    return [
        CaseStudy(
            f"satellite_row{j + 1}",
            single_type_problem(kappa, sigma, cost, ValueKind.RB),
        )
        for j, (kappa, sigma, cost) in enumerate(rows)
    ]


def satellite_series():
    return bundled_series()


def all_cases() -> list[CaseStudy]:
    return (
        moral_hazard_grid(ValueKind.RB)
        + moral_hazard_grid(ValueKind.RPI)
        + adverse_selection_cases()
        + satellite_cases()
    )


def transfer_curve(contract, smoothing, q_lo=0.0, q_hi=3.0, points=301):
    """Plot-ready (quality, payment) columns for one contract."""
    from .model import transfer

    q = np.linspace(q_lo, q_hi, points)
    return q, transfer(q, contract, smoothing)
