import numpy as np
import pytest

from contractopt.analysis import single_type_problem
from contractopt.model import (
    AgentSpec,
    AgentTypeSpec,
    ContractParams,
    ProblemSpec,
    RiskAttitude,
    Scenario,
    UtilitySpec,
    ValueKind,
    utility,
)
from contractopt.optimizer import (
    AnnealerConfig,
    ConstraintReport,
    optimize,
    penalized_objective,
    principal_objective,
    verify_solution,
)
from contractopt.quadrature import gauss_hermite_1d

TINY = AnnealerConfig(particle_count=24, n_stages=6, mcmc_steps_per_stage=2, seed=3)


def reserved_problem(reservation):
    agent = AgentSpec(
        types=(AgentTypeSpec(kappa=1.5, cost_coeff=0.4, sigma=0.1,
                             reservation_utility=reservation),),
        risk_attitude=RiskAttitude.RISK_AVERSE,
    )
    return ProblemSpec(agents=(agent,), scenario=Scenario.TYPE_INDEPENDENT)


class TestObjectives:
    def test_zero_contract_objective_vanishes(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        value = principal_objective(np.zeros(4), problem)
        assert abs(value) < 1e-12

    def test_participation_pay_shifts_objective(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        base = principal_objective(np.zeros(4), problem)
        shifted = principal_objective(np.array([0.15, 0.0, 1.0, 0.0]), problem)
        assert shifted - base == pytest.approx(-0.15, abs=1e-12)

    def test_penalized_equals_raw_when_feasible(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        params = np.array([0.2, 0.0, 1.0, 0.0])  # pay-to-participate, no effort sought
        assert penalized_objective(params, problem) == pytest.approx(
            principal_objective(params, problem), abs=1e-14
        )

    def test_single_violation_costs_weight_times_margin(self):
        problem = reserved_problem(0.3)
        params = np.zeros(4)  # zero contract: equilibrium utility 0 < 0.3
        raw = principal_objective(params, problem)
        for weight in (1.0, 10.0, 25.0):
            got = penalized_objective(params, problem, penalty_weight=weight)
            assert got == pytest.approx(raw - weight * 0.3, abs=1e-10)

    def test_parameter_shape_checked(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        with pytest.raises(ValueError):
            principal_objective(np.zeros(7), problem)


class TestOptimize:
    def test_seed_determinism(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        a = optimize(problem, TINY)
        b = optimize(problem, TINY)
        np.testing.assert_array_equal(a.flat_params(), b.flat_params())
        assert a.principal_expected_utility == b.principal_expected_utility
        assert a.diagnostics.ess_trace == b.diagnostics.ess_trace

    def test_different_seeds_explore_differently(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        a = optimize(problem, TINY)
        b = optimize(problem, AnnealerConfig(particle_count=24, n_stages=6,
                                             mcmc_steps_per_stage=2, seed=4))
        assert not np.array_equal(a.flat_params(), b.flat_params())

    def test_contracts_nonnegative_and_rb_has_no_slope(self):
        problem = single_type_problem(2.5, 0.4, 0.1, ValueKind.RB)
        result = optimize(problem, TINY)
        params = result.flat_params()
        assert np.all(params >= 0.0)
        assert result.contract_for(0).incentive == 0.0
        assert result.constraint_report.implementability_ok

    def test_reevaluation_matches_reported_utility(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        result = optimize(problem, TINY)
        again = principal_objective(result.flat_params(), problem)
        assert result.principal_expected_utility == pytest.approx(again, abs=1e-6)

    def test_elite_trace_monotone(self):
        problem = single_type_problem(1.5, 0.4, 0.4, ValueKind.RB)
        result = optimize(problem, TINY)
        trace = np.array(result.diagnostics.best_objective_trace)
        assert np.all(np.diff(trace) >= 0)

    def test_degenerate_type_dependent_reduces_to_independent(self):
        agent = AgentSpec(
            types=(AgentTypeSpec(kappa=1.5, cost_coeff=0.4, sigma=0.1),),
            risk_attitude=RiskAttitude.RISK_AVERSE,
        )
        cfg = AnnealerConfig(particle_count=64, n_stages=16, mcmc_steps_per_stage=4, seed=5)
        independent = optimize(
            ProblemSpec(agents=(agent,), scenario=Scenario.TYPE_INDEPENDENT), cfg
        )
        dependent = optimize(
            ProblemSpec(agents=(agent,), scenario=Scenario.TYPE_DEPENDENT), cfg
        )
        assert dependent.principal_expected_utility == pytest.approx(
            independent.principal_expected_utility, abs=0.02
        )

    def test_type_independent_has_no_ic_entries(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        result = optimize(problem, TINY)
        assert result.constraint_report.ic_residuals == {}

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AnnealerConfig(gamma_start=0.0)
        with pytest.raises(ValueError):
            AnnealerConfig(gamma_start=5.0, gamma_end=1.0)
        with pytest.raises(ValueError):
            AnnealerConfig(particle_count=1)


class TestVerifySolution:
    def test_reservation_pay_margin(self):
        # paying exactly the reservation as base pay: the agent exerts no
        # effort and the margin is u(reservation) - reservation
        reservation = 0.4
        problem = reserved_problem(reservation)
        result = optimize(problem, TINY)
        handbuilt = result.__class__(
            contracts=((ContractParams(reservation, 0.0, 1.0, 0.0),),),
            efforts={(0, 0, 0): 0.0},
            principal_expected_utility=0.0,
            agent_expected_utilities={(0, 0): 0.0},
            penalized_objective=0.0,
            constraint_report=result.constraint_report,
            scenario=problem.scenario,
            seed=0,
            diagnostics=result.diagnostics,
        )
        report = verify_solution(handbuilt, problem)
        expected = float(utility(reservation, problem.agents[0].utility_spec())) - reservation
        assert report.participation_residuals[(0, 0)] == pytest.approx(expected, abs=1e-9)

    def test_finer_grid_confirms_solver_feasibility(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        cfg = AnnealerConfig(particle_count=64, n_stages=16, mcmc_steps_per_stage=4, seed=2)
        result = optimize(problem, cfg)
        report = verify_solution(result, problem)
        assert all(m >= -1e-3 for m in report.participation_residuals.values())

    def test_report_feasibility_logic(self):
        ok = ConstraintReport({(0, 0): 0.01}, {}, True)
        assert ok.feasible
        bad = ConstraintReport({(0, 0): -0.5}, {}, True)
        assert not bad.feasible
        within_tol = ConstraintReport({(0, 0): -1e-4}, {(0, 0, 1): -5e-4}, True)
        assert within_tol.feasible


class TestCustomRules:
    def test_explicit_rule_accepted(self):
        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        rule = gauss_hermite_1d(16)
        value = principal_objective(np.array([0.0, 0.29, 1.06, 0.0]), problem, rule=rule)
        assert np.isfinite(value)

    def test_wrong_dimension_rejected(self):
        from contractopt.quadrature import sparse_grid

        problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        with pytest.raises(ValueError):
            principal_objective(np.zeros(4), problem, rule=sparse_grid(2, 3))

    def test_principal_risk_aversion_changes_objective(self):
        base = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
        averse = ProblemSpec(
            agents=base.agents,
            value=base.value,
            principal_utility=UtilitySpec(kind=RiskAttitude.RISK_AVERSE, risk_coeff=2.0),
            smoothing=base.smoothing,
            scenario=base.scenario,
        )
        params = np.array([0.0, 0.29, 1.06, 0.0])
        assert principal_objective(params, averse) != pytest.approx(
            principal_objective(params, base), abs=1e-6
        )
