"""The principal's outer problem: optimal contract parameters.

Constraints (nonnegative parameters, participation, truth-telling) are
folded into a penalized objective; the nonnegativity itself is structural,
enforced by keeping the search inside a box. The penalized objective is
maximized by sampling from increasingly tempered distributions with a
sequential Monte Carlo annealer, then polishing the best particle with a
deterministic shrinking-step local search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .best_response import InnerSolverConfig, solve_effort_batch
from .model import (
    EXP_CLAMP,
    ContractParams,
    ProblemSpec,
    RiskAttitude,
    Scenario,
    ValueKind,
)
from .quadrature import QuadratureRule, default_rule, gauss_hermite_1d, type_assignments


class SolverError(RuntimeError):
    """Raised when the annealer cannot continue; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class AnnealerConfig:
    """Tempering schedule and particle-system settings."""

    gamma_start: float = 0.001
    gamma_end: float = 50.0
    n_stages: int = 48
    particle_count: int = 256
    mcmc_steps_per_stage: int = 8
    ess_threshold: float = 0.5
    seed: int = 0
    penalty_weight: float | None = None  # defaults to 10 * v0
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)
    polish_step_tol: float = 1e-8
    polish_max_iter: int = 600
    polish_starts: int = 4

    def __post_init__(self):
        if not 0 < self.gamma_start < self.gamma_end:
            raise ValueError("need 0 < gamma_start < gamma_end")
        if self.particle_count < 2:
            raise ValueError("particle_count must be at least 2")
        if self.n_stages < 1:
            raise ValueError("n_stages must be at least 1")
        if not 0.0 < self.ess_threshold <= 1.0:
            raise ValueError("ess_threshold is a fraction of the particle count")


@dataclass(frozen=True)
class ConstraintReport:
    """Participation and truth-telling margins at a candidate solution.

    Margins are signed slack: nonnegative means satisfied. Keys are
    (agent, type) for participation and (agent, true type, announced type)
    for incentive compatibility.
    """

    participation_residuals: dict
    ic_residuals: dict
    implementability_ok: bool
    feasibility_tol: float = 1e-3

    @property
    def feasible(self) -> bool:
        margins = list(self.participation_residuals.values())
        margins += list(self.ic_residuals.values())
        return self.implementability_ok and all(m >= -self.feasibility_tol for m in margins)


@dataclass(frozen=True)
class AnnealerDiagnostics:
    gamma_schedule: tuple
    ess_trace: tuple
    acceptance_trace: tuple
    best_objective_trace: tuple
    resample_stages: tuple
    objective_evaluations: int
    polish_iterations: int
    wall_time: float


@dataclass(frozen=True)
class SolveResult:
    """Optimal contracts with equilibrium quantities and diagnostics."""

    contracts: tuple  # per agent, tuple of ContractParams (one per type, or one shared)
    efforts: dict  # (agent, true type, announced type) -> best-response effort
    principal_expected_utility: float
    agent_expected_utilities: dict  # (agent, type) -> equilibrium expected utility
    penalized_objective: float
    constraint_report: ConstraintReport
    scenario: Scenario
    seed: int
    diagnostics: AnnealerDiagnostics

    def contract_for(self, agent: int, announced: int = 0) -> ContractParams:
        block = self.contracts[agent]
        return block[announced] if len(block) > 1 else block[0]

    def flat_params(self) -> np.ndarray:
        return np.concatenate([c.as_array() for block in self.contracts for c in block])


class _ObjectiveContext:
    """Precomputed problem layout plus batched objective evaluation."""

    def __init__(
        self,
        problem: ProblemSpec,
        outer_rule: QuadratureRule,
        inner_rule: QuadratureRule,
        inner_cfg: InnerSolverConfig,
        penalty_weight: float,
    ):
        if outer_rule.dimension != problem.n_agents:
            raise ValueError(
                f"outer rule dimension {outer_rule.dimension} does not match "
                f"{problem.n_agents} agents"
            )
        if inner_rule.dimension != 1:
            raise ValueError("inner rule must be one-dimensional")
        self.problem = problem
        self.outer_rule = outer_rule
        self.inner_nodes = inner_rule.axis(0)
        self.inner_weights = inner_rule.weights
        self.inner_cfg = inner_cfg
        self.penalty_weight = penalty_weight
        self.assignments = [(t, p) for t, p in type_assignments(problem) if p > 0.0]

        self.offsets = []
        off = 0
        for i in range(problem.n_agents):
            self.offsets.append(off)
            off += 4 * problem.contracts_per_agent(i)
        self.n_params = off

        self.type_dependent = problem.scenario is Scenario.TYPE_DEPENDENT
        self.triples = []
        for i, agent in enumerate(problem.agents):
            for k in range(agent.n_types):
                self.triples.append((i, k, k))
                if self.type_dependent:
                    for l in range(agent.n_types):
                        if l != k:
                            self.triples.append((i, k, l))

    def contract_block(self, params: np.ndarray, agent: int, announced: int) -> np.ndarray:
        idx = announced if self.type_dependent else 0
        start = self.offsets[agent] + 4 * idx
        return params[:, start : start + 4]

    def search_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.zeros(self.n_params)
        hi = np.zeros(self.n_params)
        v0 = self.problem.value.v0
        rb = self.problem.value.kind is ValueKind.RB
        for i, agent in enumerate(self.problem.agents):
            reach = max(t.kappa for t in agent.types) + 4.0 * max(t.sigma for t in agent.types)
            for c in range(self.problem.contracts_per_agent(i)):
                s = self.offsets[i] + 4 * c
                hi[s + 0] = 2.0 * v0
                hi[s + 1] = 2.0 * v0
                hi[s + 2] = reach
                hi[s + 3] = 0.0 if rb else 2.0 * v0
        return lo, hi

    def evaluate(self, params: np.ndarray) -> dict:
        """Raw and penalized objective for a batch of flat parameter rows."""
        params = np.atleast_2d(np.asarray(params, dtype=float))
        if params.shape[1] != self.n_params:
            raise ValueError(
                f"expected {self.n_params} contract parameters, got {params.shape[1]}"
            )
        B = params.shape[0]
        problem = self.problem
        smoothing = problem.smoothing

        efforts: dict[tuple, np.ndarray] = {}
        utilities: dict[tuple, np.ndarray] = {}
        evaluations = 0
        for i, k, l in self.triples:
            agent = problem.agents[i]
            spec = agent.types[k]
            u = agent.utility_spec()
            risk_averse = u.kind is RiskAttitude.RISK_AVERSE
            e, v, n = solve_effort_batch(
                self.contract_block(params, i, l),
                spec.kappa, spec.sigma, spec.cost_coeff,
                risk_averse, u.risk_coeff, u.scale if risk_averse else 1.0,
                smoothing.alpha_transfer, self.inner_nodes, self.inner_weights,
                self.inner_cfg,
            )
            if not (np.isfinite(e).all() and np.isfinite(v).all()):
                raise SolverError(f"inner solve returned non-finite values for agent {i}, "
                                  f"true type {k}, announced {l}")
            efforts[(i, k, l)] = e
            utilities[(i, k, l)] = v
            evaluations += n

        participation = {}
        for i, agent in enumerate(problem.agents):
            for k, spec in enumerate(agent.types):
                participation[(i, k)] = utilities[(i, k, k)] - spec.reservation_utility
        ic = {}
        if self.type_dependent:
            for i, agent in enumerate(problem.agents):
                for k in range(agent.n_types):
                    for l in range(agent.n_types):
                        if l != k:
                            ic[(i, k, l)] = utilities[(i, k, k)] - utilities[(i, k, l)]

        raw = self._principal_utility(params, efforts)
        penalty = np.zeros(B)
        for m in participation.values():
            penalty += np.minimum(m, 0.0)
        for m in ic.values():
            penalty += np.minimum(m, 0.0)
        penalized = raw + self.penalty_weight * penalty
        return {
            "raw": raw,
            "penalized": penalized,
            "efforts": efforts,
            "utilities": utilities,
            "participation": participation,
            "ic": ic,
            "evaluations": evaluations,
        }

    def _principal_utility(self, params: np.ndarray, efforts: dict) -> np.ndarray:
        problem = self.problem
        value = problem.value
        alpha_v = problem.smoothing.alpha_value
        alpha_t = problem.smoothing.alpha_transfer
        u0 = problem.principal_utility
        B = params.shape[0]
        weights = self.outer_rule.weights
        raw = np.zeros(B)
        for theta, p in self.assignments:
            gates = np.ones((B, self.outer_rule.n_points))
            pay = np.zeros((B, self.outer_rule.n_points))
            for i, k in enumerate(theta):
                spec = problem.agents[i].types[k]
                q = spec.kappa * efforts[(i, k, k)][:, None] + spec.sigma * self.outer_rule.axis(i)
                g = _sigmoid(alpha_v * (q - value.requirement))
                if value.kind is ValueKind.RPI:
                    g = g * (1.0 + value.incentive_slope * (q - value.requirement))
                gates *= g
                pay += _transfer_batch(q, self.contract_block(params, i, k), alpha_t)
            pi0 = value.v0 * gates - pay
            if u0.kind is RiskAttitude.RISK_AVERSE:
                util = u0.scale * (1.0 - np.exp(np.clip(-u0.risk_coeff * pi0, -EXP_CLAMP, EXP_CLAMP)))
            else:
                util = pi0
            raw += p * (util @ weights)
        return raw


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(np.clip(-z, -EXP_CLAMP, EXP_CLAMP)))


def _transfer_batch(q: np.ndarray, a: np.ndarray, alpha_t: float) -> np.ndarray:
    d = q - a[:, 2:3]
    gate = _sigmoid(alpha_t * d)
    return a[:, 0:1] + (a[:, 1:2] + a[:, 3:4] * d) * gate


def _make_context(
    problem: ProblemSpec,
    rule: QuadratureRule | None,
    inner_rule: QuadratureRule | None,
    inner_cfg: InnerSolverConfig | None,
    penalty_weight: float | None,
) -> _ObjectiveContext:
    outer = rule or default_rule(problem)
    if inner_rule is None:
        inner_rule = outer if outer.dimension == 1 else gauss_hermite_1d(32)
    weight = 10.0 * problem.value.v0 if penalty_weight is None else penalty_weight
    if weight <= 0:
        raise ValueError("penalty weight must be positive")
    return _ObjectiveContext(problem, outer, inner_rule, inner_cfg or InnerSolverConfig(), weight)


def principal_objective(
    params,
    problem: ProblemSpec,
    rule: QuadratureRule | None = None,
    inner_rule: QuadratureRule | None = None,
    inner_cfg: InnerSolverConfig | None = None,
) -> float:
    """Expected principal utility at the given flat contract parameters,
    with every agent type playing its best response to its own contract."""
    ctx = _make_context(problem, rule, inner_rule, inner_cfg, None)
    return float(ctx.evaluate(np.asarray(params, dtype=float)[None, :])["raw"][0])


def penalized_objective(
    params,
    problem: ProblemSpec,
    rule: QuadratureRule | None = None,
    penalty_weight: float | None = None,
    inner_rule: QuadratureRule | None = None,
    inner_cfg: InnerSolverConfig | None = None,
) -> float:
    """Principal objective minus weighted participation/truth-telling
    violations; equals the raw objective whenever all margins are
    nonnegative."""
    ctx = _make_context(problem, rule, inner_rule, inner_cfg, penalty_weight)
    return float(ctx.evaluate(np.asarray(params, dtype=float)[None, :])["penalized"][0])


def _systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right")


def optimize(
    problem: ProblemSpec,
    annealer_cfg: AnnealerConfig | None = None,
    rule: QuadratureRule | None = None,
    inner_rule: QuadratureRule | None = None,
) -> SolveResult:
    """Solve the outer contract problem by tempered SMC plus local polish.

    Deterministic given the seed in the annealer config: identical seeds
    and configurations reproduce the result bit for bit.

    For type-dependent scenarios the shared-contract restriction (identical
    contracts for every type, truth-telling margins identically zero) is
    solved first and its solution is kept as an extra polish start, because
    pooling optima sit on a constraint knife-edge the sampler rarely hits
    exactly.
    """
    cfg = annealer_cfg or AnnealerConfig()
    started = time.perf_counter()
    ctx = _make_context(problem, rule, inner_rule, cfg.inner, cfg.penalty_weight)

    pooled_start = None
    if problem.scenario is Scenario.TYPE_DEPENDENT and any(
        a.n_types > 1 for a in problem.agents
    ):
        shared = replace(problem, scenario=Scenario.TYPE_INDEPENDENT)
        shared_result = optimize(shared, cfg, rule=rule, inner_rule=inner_rule)
        blocks = []
        for i, agent in enumerate(problem.agents):
            block = shared_result.contracts[i][0].as_array()
            blocks.append(np.tile(block, agent.n_types))
        pooled_start = np.concatenate(blocks)
    rng = np.random.default_rng(cfg.seed)
    lo, hi = ctx.search_box()
    width = hi - lo
    free = width > 0
    n_free = int(free.sum())
    P = cfg.particle_count

    x = lo + width * rng.uniform(size=(P, ctx.n_params))
    f = ctx.evaluate(x)["penalized"]
    n_evals = P
    if not np.isfinite(f).all():
        raise SolverError("non-finite penalized objective at initialization")

    elite_idx = int(np.argmax(f))
    elite_x, elite_f = x[elite_idx].copy(), float(f[elite_idx])

    gammas = np.geomspace(cfg.gamma_start, cfg.gamma_end, cfg.n_stages)
    log_w = np.zeros(P)
    steps = 0.25 * width
    ess_trace, acc_trace, best_trace, resample_stages = [], [], [], []
    prev_gamma = 0.0

    for stage, gamma in enumerate(gammas):
        log_w = log_w + (gamma - prev_gamma) * f
        prev_gamma = gamma
        log_w -= log_w.max()
        w = np.exp(log_w)
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            raise SolverError(
                f"weight collapse at stage {stage} (gamma={gamma:g})",
                diagnostics={"ess_trace": ess_trace, "stage": stage},
            )
        w /= total
        ess = 1.0 / float((w**2).sum())
        ess_trace.append(ess)
        if ess < 1.0 + 1e-12 and stage > 0:
            # all mass on one particle: resample still works, but flag pathological runs
            pass
        if ess < cfg.ess_threshold * P:
            idx = _systematic_resample(w, rng)
            x = x[idx].copy()
            f = f[idx].copy()
            log_w = np.zeros(P)
            resample_stages.append(stage)

        accepted = 0
        attempted = 0
        for _ in range(cfg.mcmc_steps_per_stage):
            noise = rng.standard_normal((P, ctx.n_params))
            proposal = x + steps * noise
            in_box = np.all((proposal >= lo) & (proposal <= hi), axis=1)
            u = rng.random(P)  # drawn for every particle to keep the stream aligned
            if in_box.any():
                fp = ctx.evaluate(proposal[in_box])["penalized"]
                n_evals += int(in_box.sum())
                accept = np.zeros(P, dtype=bool)
                accept[in_box] = np.log(u[in_box] + 1e-300) < gamma * (fp - f[in_box])
                moved = np.where(accept[in_box])[0]
                if moved.size:
                    rows = np.where(in_box)[0][moved]
                    x[rows] = proposal[rows]
                    f[rows] = fp[moved]
                accepted += int(accept.sum())
                j = int(np.argmax(fp))
                if fp[j] > elite_f:
                    elite_f = float(fp[j])
                    elite_x = proposal[in_box][j].copy()
            attempted += P
        rate = accepted / max(attempted, 1)
        acc_trace.append(rate)
        if rate < 0.20:
            steps = np.maximum(steps * 0.6, 1e-9 * width)
        elif rate > 0.40:
            steps = np.minimum(steps * 1.4, width)

        j = int(np.argmax(f))
        if f[j] > elite_f:
            elite_f = float(f[j])
            elite_x = x[j].copy()
        best_trace.append(elite_f)

    pool_x = [elite_x[None, :], x]
    pool_f = [np.array([elite_f]), f]
    if pooled_start is not None:
        pool_x.append(pooled_start[None, :])
        pool_f.append(ctx.evaluate(pooled_start[None, :])["penalized"])
        n_evals += 1
    starts_x, starts_f = _select_polish_starts(
        np.vstack(pool_x), np.concatenate(pool_f), lo, hi, cfg.polish_starts,
    )
    if pooled_start is not None and not any(
        np.array_equal(pooled_start, s) for s in starts_x
    ):
        starts_x = np.vstack([starts_x, pooled_start[None, :]])
        starts_f = np.concatenate([starts_f, pool_f[-1]])
    polished_x, polished_f, polish_iters, polish_evals = _polish(
        ctx, starts_x, starts_f, lo, hi, cfg.polish_step_tol, cfg.polish_max_iter
    )
    n_evals += polish_evals

    final = ctx.evaluate(polished_x[None, :])
    n_evals += 1
    result = _build_result(ctx, polished_x, final, cfg, ess_trace, acc_trace, best_trace,
                           resample_stages, gammas, n_evals, polish_iters, started)
    return result


def _select_polish_starts(points, values, lo, hi, n_starts, min_separation=0.02):
    """Greedily pick high-value particles that are mutually separated, so the
    polish explores distinct basins rather than one crowded mode."""
    width = np.where(hi - lo > 0, hi - lo, 1.0)
    order = np.argsort(values)[::-1]
    chosen = []
    for idx in order:
        candidate = points[idx]
        if all(
            np.max(np.abs(candidate - points[j]) / width) >= min_separation for j in chosen
        ):
            chosen.append(idx)
        if len(chosen) >= n_starts:
            break
    return points[chosen], values[chosen]


def _polish(ctx, starts_x, starts_f, lo, hi, step_tol, max_iter):
    """Deterministic local polish: bounded Nelder-Mead from each start on
    the free coordinates, keeping the best endpoint. Never returns a point
    worse than the best start."""
    from scipy.optimize import minimize

    free = np.nonzero(hi - lo > 0)[0]
    best_i = int(np.argmax(starts_f))
    best_x, best_f = starts_x[best_i].copy(), float(starts_f[best_i])
    if free.size == 0:
        return best_x, best_f, 0, 0
    counter = {"evals": 0}
    total_iters = 0

    for x0, f0 in zip(starts_x, starts_f):
        fixed = x0.copy()

        def negated(v):
            full = fixed.copy()
            full[free] = v
            counter["evals"] += 1
            return -float(ctx.evaluate(full[None, :])["penalized"][0])

        simplex = np.repeat(x0[free][None, :], free.size + 1, axis=0)
        for j, c in enumerate(free):
            stride = 0.02 * (hi[c] - lo[c])
            vertex = x0[c] + stride if x0[c] + stride <= hi[c] else x0[c] - stride
            simplex[j + 1, j] = vertex
        res = minimize(
            negated,
            x0[free],
            method="Nelder-Mead",
            bounds=[(lo[c], hi[c]) for c in free],
            options={"xatol": 1e-9, "fatol": step_tol * 1e-2, "maxiter": max_iter,
                     "maxfev": 4 * max_iter, "initial_simplex": simplex},
        )
        total_iters += int(res.nit)
        fx = -float(res.fun)
        if fx > best_f:
            best_f = fx
            best_x = fixed
            best_x[free] = np.clip(res.x, lo[free], hi[free])
    return best_x, best_f, total_iters, counter["evals"]


def _build_result(ctx, params, final, cfg, ess_trace, acc_trace, best_trace,
                  resample_stages, gammas, n_evals, polish_iters, started) -> SolveResult:
    problem = ctx.problem
    contracts = []
    for i in range(problem.n_agents):
        block = []
        for c in range(problem.contracts_per_agent(i)):
            s = ctx.offsets[i] + 4 * c
            block.append(ContractParams.from_array(params[s : s + 4]))
        contracts.append(tuple(block))

    efforts = {key: float(v[0]) for key, v in final["efforts"].items()}
    agent_eu = {
        (i, k): float(final["utilities"][(i, k, k)][0])
        for i, agent in enumerate(problem.agents)
        for k in range(agent.n_types)
    }
    report = ConstraintReport(
        participation_residuals={k: float(v[0]) for k, v in final["participation"].items()},
        ic_residuals={k: float(v[0]) for k, v in final["ic"].items()},
        implementability_ok=bool(np.all(params >= 0.0)),
    )
    diagnostics = AnnealerDiagnostics(
        gamma_schedule=tuple(float(g) for g in gammas),
        ess_trace=tuple(ess_trace),
        acceptance_trace=tuple(acc_trace),
        best_objective_trace=tuple(best_trace),
        resample_stages=tuple(resample_stages),
        objective_evaluations=n_evals,
        polish_iterations=polish_iters,
        wall_time=time.perf_counter() - started,
    )
    return SolveResult(
        contracts=tuple(contracts),
        efforts=efforts,
        principal_expected_utility=float(final["raw"][0]),
        agent_expected_utilities=agent_eu,
        penalized_objective=float(final["penalized"][0]),
        constraint_report=report,
        scenario=problem.scenario,
        seed=cfg.seed,
        diagnostics=diagnostics,
    )


def verify_solution(
    result: SolveResult,
    problem: ProblemSpec,
    rule: QuadratureRule | None = None,
    inner_rule: QuadratureRule | None = None,
    feasibility_tol: float = 1e-3,
    grid_factor: int = 4,
) -> ConstraintReport:
    """Recompute all constraint margins with a denser inner effort grid.

    Report-only: flags violations beyond the tolerance without modifying
    the solution.
    """
    base = InnerSolverConfig()
    fine = replace(base, grid_points=grid_factor * base.grid_points)
    ctx = _make_context(problem, rule, inner_rule, fine, None)
    out = ctx.evaluate(result.flat_params()[None, :])
    return ConstraintReport(
        participation_residuals={k: float(v[0]) for k, v in out["participation"].items()},
        ic_residuals={k: float(v[0]) for k, v in out["ic"].items()},
        implementability_ok=bool(np.all(result.flat_params() >= 0.0)),
        feasibility_tol=feasibility_tol,
    )


def solve_seeds(
    problem: ProblemSpec,
    annealer_cfg: AnnealerConfig | None = None,
    n_seeds: int = 5,
    rule: QuadratureRule | None = None,
) -> list[SolveResult]:
    """Run the annealer from seeds base, base+1, ... and return every result
    (the outer problem is stochastic; reruns with the same base reproduce)."""
    cfg = annealer_cfg or AnnealerConfig()
    return [optimize(problem, replace(cfg, seed=cfg.seed + j), rule=rule) for j in range(n_seeds)]


def best_of_seeds(
    problem: ProblemSpec,
    annealer_cfg: AnnealerConfig | None = None,
    n_seeds: int = 5,
    rule: QuadratureRule | None = None,
) -> SolveResult:
    """Best penalized objective across a battery of seeds."""
    results = solve_seeds(problem, annealer_cfg, n_seeds=n_seeds, rule=rule)
    return max(results, key=lambda r: r.penalized_objective)
