"""The agent's inner problem: expected-utility-maximizing effort.

The objective is generally non-concave, so the solver sweeps a coarse
uniform effort grid and then polishes the leading grid points with a
deterministic bracket-shrinking refinement. Everything is vectorized over
batches of contracts because the outer optimizer evaluates thousands of
candidate contracts per stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EXP_CLAMP, AgentSpec, RiskAttitude, SmoothingSpec
from .quadrature import QuadratureRule


@dataclass(frozen=True)
class InnerSolverConfig:
    """Grid density and polish depth for the effort search."""

    grid_points: int = 64
    polish_candidates: int = 3
    polish_rounds: int = 8
    tie_tolerance: float = 1e-12

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if self.polish_candidates < 1:
            raise ValueError("polish_candidates must be at least 1")
        if self.polish_rounds < 0:
            raise ValueError("polish_rounds must be nonnegative")


@dataclass(frozen=True)
class BestResponse:
    """Solution of the agent's effort problem for one (type, contract) pair."""

    effort: float
    expected_utility: float
    objective_evaluations: int
    converged: bool = True


def _utility_values(pi: np.ndarray, risk_averse: bool, coeff: float, scale: float):
    if not risk_averse:
        return pi
    z = np.clip(-coeff * pi, -EXP_CLAMP, EXP_CLAMP)
    return scale - scale * np.exp(z)


def expected_utility_batch(
    efforts: np.ndarray,
    contracts: np.ndarray,
    kappa: float,
    sigma: float,
    cost_coeff: float,
    risk_averse: bool,
    risk_coeff: float,
    utility_scale: float,
    alpha_transfer: float,
    nodes: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """Expected agent utility on an effort grid, per contract.

    efforts is (B, E), contracts is (B, 4); returns (B, E). The noise
    expectation runs over the 1D rule (nodes, weights).
    """
    q = kappa * efforts[:, :, None] + sigma * nodes
    d = q - contracts[:, 2][:, None, None]
    gate = 1.0 / (1.0 + np.exp(np.clip(-alpha_transfer * d, -EXP_CLAMP, EXP_CLAMP)))
    pay = contracts[:, 0][:, None, None] + (
        contracts[:, 1][:, None, None] + contracts[:, 3][:, None, None] * d
    ) * gate
    pi = pay - cost_coeff * (efforts**2)[:, :, None]
    return _utility_values(pi, risk_averse, risk_coeff, utility_scale) @ weights


def solve_effort_batch(
    contracts: np.ndarray,
    kappa: float,
    sigma: float,
    cost_coeff: float,
    risk_averse: bool,
    risk_coeff: float,
    utility_scale: float,
    alpha_transfer: float,
    nodes: np.ndarray,
    weights: np.ndarray,
    cfg: InnerSolverConfig,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Globally maximize expected agent utility over effort in [0, 1] for a
    batch of contracts. Returns (efforts (B,), values (B,), evaluations).

    Ties within cfg.tie_tolerance break toward the smaller effort.
    """
    contracts = np.atleast_2d(np.asarray(contracts, dtype=float))
    B = contracts.shape[0]
    G = cfg.grid_points

    def eu(e2d):
        return expected_utility_batch(
            e2d, contracts, kappa, sigma, cost_coeff,
            risk_averse, risk_coeff, utility_scale, alpha_transfer, nodes, weights,
        )

    base = np.linspace(0.0, 1.0, G)
    values = eu(np.broadcast_to(base, (B, G)))
    if not np.isfinite(values).all():
        raise ValueError(
            "non-finite agent objective on the effort grid; check the model configuration"
        )
    evaluations = G

    C = min(cfg.polish_candidates, G)
    top = np.argpartition(values, G - C, axis=1)[:, G - C:]
    cand_e = np.broadcast_to(base, (B, G))[np.arange(B)[:, None], top]
    cand_v = np.take_along_axis(values, top, axis=1)

    spacing = 1.0 / (G - 1)
    lo = np.clip(cand_e - spacing, 0.0, 1.0)
    hi = np.clip(cand_e + spacing, 0.0, 1.0)
    P = 9
    offsets = np.linspace(0.0, 1.0, P)
    for _ in range(cfg.polish_rounds):
        pts = lo[:, :, None] + (hi - lo)[:, :, None] * offsets  # (B, C, P)
        vals = eu(pts.reshape(B, C * P)).reshape(B, C, P)
        evaluations += C * P
        j = np.argmax(vals, axis=2)
        jlo = np.maximum(j - 1, 0)
        jhi = np.minimum(j + 1, P - 1)
        lo = np.take_along_axis(pts, jlo[:, :, None], axis=2)[:, :, 0]
        hi = np.take_along_axis(pts, jhi[:, :, None], axis=2)[:, :, 0]
        cand_e = np.take_along_axis(pts, j[:, :, None], axis=2)[:, :, 0]
        cand_v = np.take_along_axis(vals, j[:, :, None], axis=2)[:, :, 0]

    best_v = cand_v.max(axis=1)
    eligible = cand_v >= best_v[:, None] - cfg.tie_tolerance
    sel = np.argmin(np.where(eligible, cand_e, np.inf), axis=1)
    rows = np.arange(B)
    return cand_e[rows, sel], cand_v[rows, sel], evaluations


def _unpack_1d_rule(rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    if rule.dimension != 1:
        raise ValueError("agent expectations use a one-dimensional noise rule")
    return rule.axis(0), rule.weights


def _type_kernel_args(agent: AgentSpec, true_type: int, smoothing: SmoothingSpec):
    if not 0 <= true_type < agent.n_types:
        raise ValueError(f"true_type index {true_type} out of range")
    spec = agent.types[true_type]
    u = agent.utility_spec()
    risk_averse = u.kind is RiskAttitude.RISK_AVERSE
    scale = u.scale if risk_averse else 1.0
    return (
        spec.kappa, spec.sigma, spec.cost_coeff,
        risk_averse, u.risk_coeff, scale, smoothing.alpha_transfer,
    )


def expected_agent_utility(
    e,
    true_type: int,
    announced: int,
    contracts,
    agent: AgentSpec,
    smoothing: SmoothingSpec,
    rule: QuadratureRule,
):
    """Expected utility of effort e for an agent of `true_type` paid under
    the `announced` type's contract (expectation over quality noise only,
    taken before the noise realizes)."""
    if not 0 <= announced < len(contracts):
        raise ValueError(f"announced index {announced} out of range")
    nodes, weights = _unpack_1d_rule(rule)
    args = _type_kernel_args(agent, true_type, smoothing)
    e_arr = np.asarray(e, dtype=float)
    if np.any(e_arr < 0) or np.any(e_arr > 1):
        raise ValueError("effort must lie in [0, 1]")
    out = expected_utility_batch(
        np.atleast_1d(e_arr)[None, :], contracts[announced].as_array()[None, :],
        *args, nodes, weights,
    )[0]
    return float(out[0]) if e_arr.ndim == 0 else out


def best_response(
    true_type: int,
    announced: int,
    contracts,
    agent: AgentSpec,
    smoothing: SmoothingSpec,
    rule: QuadratureRule,
    cfg: InnerSolverConfig | None = None,
) -> BestResponse:
    """Globally optimal effort for one (true type, announced type) pair."""
    if not 0 <= announced < len(contracts):
        raise ValueError(f"announced index {announced} out of range")
    cfg = cfg or InnerSolverConfig()
    nodes, weights = _unpack_1d_rule(rule)
    args = _type_kernel_args(agent, true_type, smoothing)
    efforts, values, evaluations = solve_effort_batch(
        contracts[announced].as_array()[None, :], *args, nodes, weights, cfg
    )
    return BestResponse(
        effort=float(efforts[0]),
        expected_utility=float(values[0]),
        objective_evaluations=evaluations,
    )
