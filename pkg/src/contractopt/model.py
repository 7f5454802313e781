"""Closed-form model ingredients for the delegated-design contracting problem.

Everything in this module is a pure, deterministic evaluation: effort costs,
noisy quality outcomes, contract transfer payments, system-level value, and
monetary utilities. The stochastic machinery (quadrature, best responses,
the outer optimizer) lives elsewhere and composes these pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Exponent clamp for sigmoids and exponential utilities. Keeps every
# evaluation finite while preserving monotonicity at machine precision.
EXP_CLAMP = 700.0


class ValueKind(str, Enum):
    RB = "RB"
    RPI = "RPI"


class RiskAttitude(str, Enum):
    RISK_AVERSE = "risk_averse"
    RISK_NEUTRAL = "risk_neutral"


class Scenario(str, Enum):
    TYPE_INDEPENDENT = "type_independent"
    TYPE_DEPENDENT = "type_dependent"


@dataclass(frozen=True)
class AgentTypeSpec:
    """One agent type: productivity, effort cost, outcome noise, and prior.

    kappa converts effort into mean quality, cost_coeff prices squared
    effort, sigma is the standard deviation of the quality noise,
    prior_prob is the probability the principal assigns to this type, and
    reservation_utility is the outside option the contract must beat.
    """

    kappa: float
    cost_coeff: float
    sigma: float
    prior_prob: float = 1.0
    reservation_utility: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.cost_coeff > 0:
            raise ValueError(f"cost_coeff must be positive, got {self.cost_coeff}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if not 0.0 <= self.prior_prob <= 1.0:
            raise ValueError(f"prior_prob must lie in [0, 1], got {self.prior_prob}")


@dataclass(frozen=True)
class AgentSpec:
    """An agent: its possible types and its risk attitude."""

    types: tuple[AgentTypeSpec, ...]
    risk_attitude: RiskAttitude = RiskAttitude.RISK_AVERSE
    risk_coeff: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        if len(self.types) < 1:
            raise ValueError("an agent needs at least one type")
        total = math.fsum(t.prior_prob for t in self.types)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"type priors must sum to 1, got {total!r}")

    @property
    def n_types(self) -> int:
        return len(self.types)

    def utility_spec(self) -> "UtilitySpec":
        return UtilitySpec(kind=self.risk_attitude, risk_coeff=self.risk_coeff)


@dataclass(frozen=True)
class ContractParams:
    """Transfer-function parameters: pay = base_pay + award past the
    requirement + incentive per unit of quality past the requirement.

    All components are nonnegative; requirement-based (RB) contracts force
    incentive = 0.
    """

    base_pay: float
    award: float
    requirement: float
    incentive: float = 0.0

    def __post_init__(self):
        for name in ("base_pay", "award", "requirement", "incentive"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.base_pay, self.award, self.requirement, self.incentive], dtype=float
        )

    @classmethod
    def from_array(cls, a) -> "ContractParams":
        a = np.asarray(a, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass(frozen=True)
class ValueSpec:
    """System-level value function: a step payment v0 at the requirement,
    optionally plus a linear bonus above it (RPI)."""

    kind: ValueKind = ValueKind.RB
    v0: float = 1.0
    incentive_slope: float = 0.2
    requirement: float = 1.0

    def __post_init__(self):
        if not self.v0 > 0:
            raise ValueError(f"v0 must be positive, got {self.v0}")
        if self.incentive_slope < 0:
            raise ValueError(f"incentive_slope must be nonnegative, got {self.incentive_slope}")


@dataclass(frozen=True)
class UtilitySpec:
    """Monetary utility: identity for risk-neutral, normalized exponential
    for risk-averse (u(0) = 0 and u(1) = 1 by construction)."""

    kind: RiskAttitude = RiskAttitude.RISK_NEUTRAL
    risk_coeff: float = 2.0

    def __post_init__(self):
        if self.kind is RiskAttitude.RISK_AVERSE and not self.risk_coeff > 0:
            raise ValueError(f"risk_coeff must be positive, got {self.risk_coeff}")

    @property
    def scale(self) -> float:
        """The shared normalization constant of the risk-averse form."""
        return 1.0 / (1.0 - math.exp(-self.risk_coeff))


@dataclass(frozen=True)
class SmoothingSpec:
    """Sigmoid sharpness used in place of hard steps: one slope for the
    transfer functions, one for the value function."""

    alpha_transfer: float = 50.0
    alpha_value: float = 100.0

    def __post_init__(self):
        if not self.alpha_transfer > 0 or not self.alpha_value > 0:
            raise ValueError("smoothing sharpness must be positive")


@dataclass(frozen=True)
class ProblemSpec:
    """A full contracting problem instance."""

    agents: tuple[AgentSpec, ...]
    value: ValueSpec = field(default_factory=ValueSpec)
    principal_utility: UtilitySpec = field(default_factory=UtilitySpec)
    smoothing: SmoothingSpec = field(default_factory=SmoothingSpec)
    scenario: Scenario = Scenario.TYPE_INDEPENDENT

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if len(self.agents) < 1:
            raise ValueError("a problem needs at least one agent")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def contracts_per_agent(self, i: int) -> int:
        """How many contracts are sought for agent i under the scenario."""
        if self.scenario is Scenario.TYPE_DEPENDENT:
            return self.agents[i].n_types
        return 1

    @property
    def n_params(self) -> int:
        """Length of the flat contract-parameter vector."""
        return 4 * sum(self.contracts_per_agent(i) for i in range(self.n_agents))


def smooth_heaviside(x, alpha: float):
    """Sigmoid replacement for the unit step, with slope alpha at zero."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    z = np.clip(-alpha * np.asarray(x, dtype=float), -EXP_CLAMP, EXP_CLAMP)
    return 1.0 / (1.0 + np.exp(z))


def cost(e, spec: AgentTypeSpec):
    """Monetary cost of effort: quadratic in e on [0, 1]."""
    e = _checked_effort(e)
    return spec.cost_coeff * e**2


def quality(e, xi, spec: AgentTypeSpec):
    """Realized quality for effort e and standard-normal draw xi."""
    e = _checked_effort(e)
    return spec.kappa * e + spec.sigma * np.asarray(xi, dtype=float)


def transfer(q, params: ContractParams, smoothing: SmoothingSpec):
    """Contract payment for realized quality q."""
    q = np.asarray(q, dtype=float)
    gate = smooth_heaviside(q - params.requirement, smoothing.alpha_transfer)
    return params.base_pay + (params.award + params.incentive * (q - params.requirement)) * gate


def system_value(q_star, value: ValueSpec, smoothing: SmoothingSpec):
    """System-level value of the realized subsystem qualities.

    q_star may be a length-N vector or an array whose last axis runs over
    the N subsystems; the product is taken over that axis.
    """
    q = np.atleast_1d(np.asarray(q_star, dtype=float))
    gate = smooth_heaviside(q - value.requirement, smoothing.alpha_value)
    if value.kind is ValueKind.RPI:
        gate = gate * (1.0 + value.incentive_slope * (q - value.requirement))
    out = value.v0 * np.prod(gate, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def utility(pi, spec: UtilitySpec):
    """Monetary utility of a payoff."""
    pi = np.asarray(pi, dtype=float)
    if spec.kind is RiskAttitude.RISK_NEUTRAL:
        return pi if pi.ndim else float(pi)
    a = spec.scale
    z = np.clip(-spec.risk_coeff * pi, -EXP_CLAMP, EXP_CLAMP)
    out = a - a * np.exp(z)
    return float(out) if out.ndim == 0 else out


def agent_payoff(
    e,
    true_type: int,
    announced: int,
    contracts,
    agent: AgentSpec,
    smoothing: SmoothingSpec,
    xi,
):
    """Agent payoff when its true type is `true_type` but it announced
    `announced`: paid under the announced type's contract, while quality
    and cost follow the true type."""
    if not 0 <= true_type < agent.n_types:
        raise ValueError(f"true_type index {true_type} out of range")
    if not 0 <= announced < len(contracts):
        raise ValueError(f"announced index {announced} out of range")
    spec = agent.types[true_type]
    q = quality(e, xi, spec)
    return transfer(q, contracts[announced], smoothing) - cost(e, spec)


def _checked_effort(e):
    e = np.asarray(e, dtype=float)
    if np.any(e < 0) or np.any(e > 1):
        raise ValueError("effort must lie in [0, 1]")
    return e
