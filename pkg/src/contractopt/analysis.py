"""Post-solution analytics: exceedance curves, parameter sweeps, and the
complexity-by-uncertainty utility tables."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import (
    EXP_CLAMP,
    AgentSpec,
    AgentTypeSpec,
    ProblemSpec,
    RiskAttitude,
    Scenario,
    ValueKind,
)
from .optimizer import AnnealerConfig, SolveResult, best_of_seeds
from .quadrature import QuadratureRule

SWEEP_AXES = {
    "complexity": "kappa",
    "cost": "cost_coeff",
    "uncertainty": "sigma",
}


@dataclass(frozen=True)
class ExceedanceCurve:
    """Empirical survival function of the principal's realized utility under
    a solved contract: P[u0 >= threshold] on an ascending threshold grid."""

    thresholds: np.ndarray
    probabilities: np.ndarray
    sample_count: int
    seed: int

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.thresholds, dtype=float))
        p = np.ascontiguousarray(np.asarray(self.probabilities, dtype=float))
        if t.shape != p.shape or t.ndim != 1:
            raise ValueError("thresholds and probabilities must be equal-length vectors")
        if np.any(np.diff(t) < 0):
            raise ValueError("thresholds must ascend")
        if np.any(np.diff(p) > 1e-15) or p.min() < 0 or p.max() > 1:
            raise ValueError("probabilities must be nonincreasing and within [0, 1]")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "probabilities", p)


def realized_utilities(
    result: SolveResult,
    problem: ProblemSpec,
    sample_count: int,
    seed: int,
) -> np.ndarray:
    """Monte Carlo draws of the principal's realized utility at the solved
    efforts: types from the prior, noise standard normal."""
    rng = np.random.default_rng(seed)
    n = int(sample_count)
    value = problem.value
    alpha_v = problem.smoothing.alpha_value
    alpha_t = problem.smoothing.alpha_transfer
    gates = np.ones(n)
    pay = np.zeros(n)
    for i, agent in enumerate(problem.agents):
        priors = np.array([t.prior_prob for t in agent.types])
        types = rng.choice(agent.n_types, size=n, p=priors / priors.sum())
        xi = rng.standard_normal(n)
        kappa = np.array([t.kappa for t in agent.types])[types]
        sigma = np.array([t.sigma for t in agent.types])[types]
        efforts = np.array(
            [result.efforts[(i, k, k)] for k in range(agent.n_types)]
        )[types]
        q = kappa * efforts + sigma * xi
        g = 1.0 / (1.0 + np.exp(np.clip(-alpha_v * (q - value.requirement), -EXP_CLAMP, EXP_CLAMP)))
        if value.kind is ValueKind.RPI:
            g = g * (1.0 + value.incentive_slope * (q - value.requirement))
        gates *= g
        params = np.stack([result.contract_for(i, k).as_array() for k in range(agent.n_types)])
        a = params[types]
        d = q - a[:, 2]
        t_gate = 1.0 / (1.0 + np.exp(np.clip(-alpha_t * d, -EXP_CLAMP, EXP_CLAMP)))
        pay += a[:, 0] + (a[:, 1] + a[:, 3] * d) * t_gate
    pi0 = value.v0 * gates - pay
    u0 = problem.principal_utility
    if u0.kind is RiskAttitude.RISK_AVERSE:
        return u0.scale * (1.0 - np.exp(np.clip(-u0.risk_coeff * pi0, -EXP_CLAMP, EXP_CLAMP)))
    return pi0


def exceedance(
    result: SolveResult,
    problem: ProblemSpec,
    sample_count: int = 100_000,
    seed: int = 0,
    grid_size: int = 256,
) -> ExceedanceCurve:
    """Survival curve of the realized principal utility under the solved
    contract. The threshold grid spans the realized range padded by 5%."""
    if sample_count < 10_000:
        raise ValueError("sample_count must be at least 10000")
    samples = np.sort(realized_utilities(result, problem, sample_count, seed))
    span = samples[-1] - samples[0]
    pad = 0.05 * span if span > 0 else max(0.05 * abs(samples[0]), 1e-6)
    thresholds = np.linspace(samples[0] - pad, samples[-1] + pad, grid_size)
    exceed_counts = len(samples) - np.searchsorted(samples, thresholds, side="left")
    return ExceedanceCurve(
        thresholds=thresholds,
        probabilities=exceed_counts / len(samples),
        sample_count=sample_count,
        seed=seed,
    )


@dataclass(frozen=True)
class SweepEntry:
    level: float
    requirement: float | None  # solved threshold component
    award: float | None
    principal_utility: float | None
    result: SolveResult | None
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    axis: str
    levels: tuple
    entries: tuple

    def trend(self, attr: str) -> list:
        return [getattr(e, attr) for e in self.entries]


def _with_type_field(problem: ProblemSpec, field_name: str, level: float) -> ProblemSpec:
    if problem.n_agents != 1 or problem.agents[0].n_types != 1:
        raise ValueError("sweeps vary a single-agent, single-type problem")
    agent = problem.agents[0]
    new_type = replace(agent.types[0], **{field_name: level})
    return replace(problem, agents=(replace(agent, types=(new_type,)),))


def sweep(
    base_problem: ProblemSpec,
    axis: str,
    levels,
    annealer_cfg: AnnealerConfig | None = None,
    n_seeds: int = 1,
    rule: QuadratureRule | None = None,
) -> SweepResult:
    """Solve the problem at each level of one type parameter and tabulate
    the solved threshold, award, and principal utility. Failures at one
    level are recorded without aborting the rest."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {sorted(SWEEP_AXES)}")
    levels = tuple(float(x) for x in levels)
    if len(levels) != len(set(levels)) or list(levels) != sorted(levels):
        raise ValueError("levels must be strictly increasing")
    entries = []
    for level in levels:
        try:
            problem = _with_type_field(base_problem, SWEEP_AXES[axis], level)
            result = best_of_seeds(problem, annealer_cfg, n_seeds=n_seeds, rule=rule)
            contract = result.contract_for(0)
            entries.append(
                SweepEntry(
                    level=level,
                    requirement=contract.requirement,
                    award=contract.award,
                    principal_utility=result.principal_expected_utility,
                    result=result,
                )
            )
        except Exception as exc:  # propagate per level, keep sweeping
            entries.append(
                SweepEntry(level=level, requirement=None, award=None,
                           principal_utility=None, result=None, error=str(exc))
            )
    return SweepResult(axis=axis, levels=levels, entries=tuple(entries))


@dataclass(frozen=True)
class UtilityTable:
    """2x2 table of solved principal utilities over complexity (rows,
    easy to hard) and uncertainty (columns, low to high)."""

    kappas: tuple
    sigmas: tuple
    cost_coeff: float
    value_kind: ValueKind
    utilities: np.ndarray  # (2, 2)
    results: tuple  # matching grid of SolveResult

    def cell(self, row: int, col: int) -> SolveResult:
        return self.results[row][col]


def single_type_problem(
    kappa: float,
    sigma: float,
    cost_coeff: float,
    value_kind: ValueKind = ValueKind.RB,
    risk_attitude: RiskAttitude = RiskAttitude.RISK_AVERSE,
) -> ProblemSpec:
    """One risk-averse agent of known type facing a risk-neutral principal."""
    agent = AgentSpec(
        types=(AgentTypeSpec(kappa=kappa, cost_coeff=cost_coeff, sigma=sigma),),
        risk_attitude=risk_attitude,
    )
    return ProblemSpec(agents=(agent,), scenario=Scenario.TYPE_INDEPENDENT,
                       value=_value_for(value_kind))


def _value_for(kind: ValueKind):
    from .model import ValueSpec

    return ValueSpec(kind=kind)


def utility_table(
    cost_coeff: float,
    value_kind: ValueKind,
    annealer_cfg: AnnealerConfig | None = None,
    kappas=(2.5, 1.5),
    sigmas=(0.1, 0.4),
    n_seeds: int = 1,
    rule: QuadratureRule | None = None,
) -> UtilityTable:
    """Solve the complexity-by-uncertainty grid at one cost level."""
    utilities = np.zeros((len(kappas), len(sigmas)))
    results = []
    for r, kappa in enumerate(kappas):
        row = []
        for c, sigma in enumerate(sigmas):
            problem = single_type_problem(kappa, sigma, cost_coeff, value_kind)
            solved = best_of_seeds(problem, annealer_cfg, n_seeds=n_seeds, rule=rule)
            utilities[r, c] = solved.principal_expected_utility
            row.append(solved)
        results.append(tuple(row))
    return UtilityTable(
        kappas=tuple(kappas),
        sigmas=tuple(sigmas),
        cost_coeff=cost_coeff,
        value_kind=value_kind,
        utilities=utilities,
        results=tuple(results),
    )
