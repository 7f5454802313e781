import math

import numpy as np
import pytest

from contractopt.model import (
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

SMOOTHING = SmoothingSpec(alpha_transfer=50.0, alpha_value=100.0)


def make_type(kappa=1.5, c=0.4, sigma=0.1, **kw):
    return AgentTypeSpec(kappa=kappa, cost_coeff=c, sigma=sigma, **kw)


class TestSmoothHeaviside:
    def test_midpoint(self):
        assert smooth_heaviside(0.0, 50.0) == 0.5

    def test_saturation(self):
        assert smooth_heaviside(1e6, 50.0) == 1.0
        assert smooth_heaviside(-1e6, 50.0) == pytest.approx(0.0, abs=1e-300)

    def test_direct_evaluation(self):
        # frozen from a 40-digit evaluation of 1/(1+e^-5)
        assert smooth_heaviside(0.1, 50.0) == pytest.approx(
            0.9933071490757151, abs=1e-14
        )

    def test_complement_identity(self):
        rng = np.random.default_rng(1)
        x = rng.normal(scale=20.0, size=2000)
        alpha = rng.uniform(0.1, 500.0, size=2000)
        total = smooth_heaviside(x, 1.0) + smooth_heaviside(-x, 1.0)
        np.testing.assert_allclose(total, 1.0, atol=1e-12)
        for xi, ai in zip(x[:50], alpha[:50]):
            assert smooth_heaviside(xi, ai) + smooth_heaviside(-xi, ai) == pytest.approx(1.0)

    def test_monotone(self):
        # strictly increasing while unsaturated, nondecreasing once the
        # exponential underflows against 1.0
        x = np.linspace(-0.9, 0.9, 1001)
        assert np.all(np.diff(smooth_heaviside(x, 37.0)) > 0)
        wide = np.linspace(-50, 50, 2001)
        assert np.all(np.diff(smooth_heaviside(wide, 37.0)) >= 0)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            smooth_heaviside(0.0, 0.0)


class TestCost:
    def test_zero_effort(self):
        assert cost(0.0, make_type(c=0.4)) == 0.0

    def test_full_effort(self):
        assert cost(1.0, make_type(c=0.4)) == pytest.approx(0.4)

    def test_half_effort(self):
        assert cost(0.5, make_type(c=0.1)) == pytest.approx(0.025)

    def test_quadratic_ratio_constant(self):
        spec = make_type(c=0.37)
        e = np.linspace(0.05, 1.0, 40)
        np.testing.assert_allclose(cost(e, spec) / e**2, spec.cost_coeff, rtol=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            cost(1.2, make_type())
        with pytest.raises(ValueError):
            cost(-0.1, make_type())


class TestQuality:
    def test_zero_noise_mean(self):
        assert quality(0.4, 0.0, make_type(kappa=2.5)) == pytest.approx(1.0)

    def test_linearity(self):
        spec = make_type(kappa=1.5, sigma=0.7)
        e = np.linspace(0, 1, 11)
        np.testing.assert_allclose(quality(e, 0.0, spec), 1.5 * e)

    def test_noise_term(self):
        assert quality(0.5, 1.0, make_type(kappa=1.5, sigma=0.4)) == pytest.approx(1.15)

    def test_domain(self):
        with pytest.raises(ValueError):
            quality(1.5, 0.0, make_type())


class TestTransfer:
    def test_participation_only_limit(self):
        params = ContractParams(0.1, 0.3, 1.0, 0.0)
        assert transfer(-1e6, params, SMOOTHING) == pytest.approx(0.1)

    def test_half_award_at_threshold(self):
        params = ContractParams(0.0, 0.3, 1.0, 0.0)
        assert transfer(1.0, params, SMOOTHING) == pytest.approx(0.15)

    def test_one_unit_above_threshold(self):
        # frozen: 0.29 / (1 + e^-50), indistinguishable from 0.29 at double precision
        params = ContractParams(0.0, 0.29, 1.06, 0.0)
        assert transfer(2.06, params, SMOOTHING) == pytest.approx(0.29, abs=1e-12)

    def test_monotone_for_nonnegative_params(self):
        # step-only contracts are globally nondecreasing; with a slope term
        # the smoothing smears a dip of at most ~0.28*a3/alpha just below
        # the threshold, so monotonicity holds from the threshold upward
        rng = np.random.default_rng(7)
        q = np.linspace(-1.0, 4.0, 2000)
        for _ in range(200):
            a0, a1, a2 = rng.uniform(0.0, 2.0, size=3)
            step_only = ContractParams(a0, a1, a2, 0.0)
            t = transfer(q, step_only, SMOOTHING)
            assert np.all(np.diff(t) >= -1e-12)

            a3 = rng.uniform(0.0, 2.0)
            sloped = ContractParams(a0, a1, a2, a3)
            t = transfer(q, sloped, SMOOTHING)
            above = q >= a2
            assert np.all(np.diff(t[above]) >= -1e-12)
            assert np.all(t >= a0 - 0.3 * a3 / SMOOTHING.alpha_transfer)

    def test_nonnegativity_enforced(self):
        with pytest.raises(ValueError):
            ContractParams(-0.1, 0.3, 1.0, 0.0)


class TestSystemValue:
    def test_threshold_behavior(self):
        rb = ValueSpec(kind=ValueKind.RB, v0=2.0, requirement=1.0)
        assert system_value([1.0], rb, SMOOTHING) == pytest.approx(1.0)  # v0 / 2
        assert system_value([3.0], rb, SMOOTHING) == pytest.approx(2.0)

    def test_rpi_slope(self):
        rpi = ValueSpec(kind=ValueKind.RPI, v0=1.0, incentive_slope=0.2, requirement=1.0)
        sharp = SmoothingSpec(alpha_transfer=50.0, alpha_value=5000.0)
        assert system_value([2.0], rpi, sharp) == pytest.approx(1.2)

    def test_tail_bound(self):
        bound = math.exp(-50.0) / (1.0 + math.exp(-50.0))
        for kind in ValueKind:
            spec = ValueSpec(kind=kind, v0=1.0, requirement=1.0)
            assert system_value([0.5], spec, SMOOTHING) <= bound * (1.0 + 1e-12)

    def test_rpi_dominates_rb_above_requirement(self):
        rng = np.random.default_rng(3)
        rb = ValueSpec(kind=ValueKind.RB, v0=1.3, requirement=1.0)
        rpi = ValueSpec(kind=ValueKind.RPI, v0=1.3, incentive_slope=0.2, requirement=1.0)
        for _ in range(300):
            q = rng.uniform(1.0, 3.0, size=rng.integers(1, 4))
            assert system_value(q, rpi, SMOOTHING) >= system_value(q, rb, SMOOTHING) - 1e-12

    def test_multi_agent_product(self):
        rb = ValueSpec(kind=ValueKind.RB, v0=1.0, requirement=1.0)
        assert system_value([2.0, 2.0], rb, SMOOTHING) == pytest.approx(1.0)
        assert system_value([2.0, 0.0], rb, SMOOTHING) == pytest.approx(0.0, abs=1e-12)


class TestUtility:
    RA = UtilitySpec(kind=RiskAttitude.RISK_AVERSE, risk_coeff=2.0)
    RN = UtilitySpec(kind=RiskAttitude.RISK_NEUTRAL)

    def test_normalization(self):
        assert utility(0.0, self.RA) == pytest.approx(0.0, abs=1e-15)
        assert utility(1.0, self.RA) == pytest.approx(1.0, abs=1e-15)

    def test_identity(self):
        assert utility(0.5, self.RN) == 0.5

    def test_increasing_concave(self):
        pi = np.linspace(-2.0, 3.0, 400)
        u = utility(pi, self.RA)
        first = np.diff(u)
        assert np.all(first > 0)
        assert np.all(np.diff(first) < 0)


class TestAgentPayoff:
    def setup_method(self):
        self.agent = AgentSpec(
            types=(
                make_type(kappa=1.5, c=0.4, sigma=0.1, prior_prob=0.5),
                make_type(kappa=2.5, c=0.1, sigma=0.4, prior_prob=0.5),
            ),
            risk_attitude=RiskAttitude.RISK_AVERSE,
        )
        self.contracts = [
            ContractParams(0.0, 0.3, 1.0, 0.0),
            ContractParams(0.05, 0.6, 1.4, 0.2),
        ]

    def test_no_effort_participation_pay_only(self):
        contracts = [ContractParams(0.25, 0.0, 1.0, 0.0)]
        pay = agent_payoff(0.0, 0, 0, contracts, self.agent, SMOOTHING, -1e6)
        assert pay == pytest.approx(0.25)

    def test_reduces_to_shared_contract_payoff(self):
        shared = [ContractParams(0.1, 0.4, 1.1, 0.0)] * 2
        for k in range(2):
            direct = transfer(
                quality(0.6, 0.3, self.agent.types[k]), shared[0], SMOOTHING
            ) - cost(0.6, self.agent.types[k])
            assert agent_payoff(0.6, k, k, shared, self.agent, SMOOTHING, 0.3) == pytest.approx(
                float(direct)
            )

    def test_cross_announcement_hand_computation(self):
        # true type 0 paid under contract 1, zero noise: quality 1.5*0.7 = 1.05,
        # gate = sigmoid(50*(1.05-1.4)), pay = 0.05 + (0.6 + 0.2*(1.05-1.4))*gate,
        # minus cost 0.4*0.49
        gate = 1.0 / (1.0 + math.exp(-50.0 * (1.05 - 1.4)))
        expected = 0.05 + (0.6 + 0.2 * (1.05 - 1.4)) * gate - 0.4 * 0.49
        got = agent_payoff(0.7, 0, 1, self.contracts, self.agent, SMOOTHING, 0.0)
        assert got == pytest.approx(expected, abs=1e-14)

    def test_invalid_indices(self):
        with pytest.raises(ValueError):
            agent_payoff(0.5, 2, 0, self.contracts, self.agent, SMOOTHING, 0.0)
        with pytest.raises(ValueError):
            agent_payoff(0.5, 0, 5, self.contracts, self.agent, SMOOTHING, 0.0)


class TestSpecValidation:
    def test_type_invariants(self):
        with pytest.raises(ValueError):
            make_type(kappa=0.0)
        with pytest.raises(ValueError):
            make_type(c=-0.1)
        with pytest.raises(ValueError):
            make_type(sigma=-0.2)
        with pytest.raises(ValueError):
            make_type(prior_prob=1.4)

    def test_prior_sum(self):
        with pytest.raises(ValueError):
            AgentSpec(types=(make_type(prior_prob=0.5), make_type(prior_prob=0.4)))

    def test_problem_requires_agents(self):
        with pytest.raises(ValueError):
            ProblemSpec(agents=())

    def test_contract_layout_by_scenario(self):
        agent = AgentSpec(types=(make_type(prior_prob=0.5), make_type(prior_prob=0.5)))
        independent = ProblemSpec(agents=(agent,), scenario=Scenario.TYPE_INDEPENDENT)
        dependent = ProblemSpec(agents=(agent,), scenario=Scenario.TYPE_DEPENDENT)
        assert independent.n_params == 4
        assert dependent.n_params == 8

    def test_value_invariants(self):
        with pytest.raises(ValueError):
            ValueSpec(v0=0.0)
        with pytest.raises(ValueError):
            ValueSpec(incentive_slope=-0.1)
