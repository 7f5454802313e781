"""Model calibration from historical investment/performance records.

A technology's performance trend is regressed on cumulative investment with
the line anchored at the current state of the art; the fitted slope and
residual scale, together with staffing and cost-rate figures, map onto the
dimensionless model parameters (kappa, sigma, cost_coeff) of a single-type
agent. A bundled synthetic solid-propellant specific-impulse series
reproduces the published trend statistics of the motivating data, which
cannot be redistributed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .model import (
    AgentSpec,
    AgentTypeSpec,
    ProblemSpec,
    RiskAttitude,
    Scenario,
    SmoothingSpec,
    UtilitySpec,
    ValueKind,
    ValueSpec,
)

BUNDLED_SERIES = "solid_propellant_isp.csv"


@dataclass(frozen=True)
class HistoricalSeries:
    """Cumulative investment vs. best achieved performance, ordered in time.

    Both columns must be nondecreasing: investment accumulates and the best
    performance never regresses.
    """

    investments: np.ndarray  # currency-millions
    performances: np.ndarray  # physical units
    years: tuple = ()
    units: str = "millions, physical"
    source: str = ""

    def __post_init__(self):
        inv = np.ascontiguousarray(np.asarray(self.investments, dtype=float))
        perf = np.ascontiguousarray(np.asarray(self.performances, dtype=float))
        if inv.shape != perf.shape or inv.ndim != 1:
            raise ValueError("investments and performances must be equal-length vectors")
        if len(inv) < 2:
            raise ValueError("need at least two records")
        if np.any(np.diff(inv) < 0):
            raise ValueError("cumulative investment must be nondecreasing")
        if np.any(np.diff(perf) < 0):
            raise ValueError("best performance must be nondecreasing")
        inv.setflags(write=False)
        perf.setflags(write=False)
        object.__setattr__(self, "investments", inv)
        object.__setattr__(self, "performances", perf)
        object.__setattr__(self, "years", tuple(self.years))

    def __len__(self) -> int:
        return len(self.investments)

    @property
    def anchor(self) -> tuple[float, float]:
        """Most recent record: the state of the art (investment, performance)."""
        return float(self.investments[-1]), float(self.performances[-1])

    @classmethod
    def from_csv(cls, path) -> "HistoricalSeries":
        """Read a delimited series with a header naming year, investment, and
        performance columns (by substring match, case-insensitive)."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip().lower() for h in next(reader)]
            cols = {name: idx for idx, name in enumerate(header)}

            def find(*needles):
                for name, idx in cols.items():
                    if any(n in name for n in needles):
                        return idx
                raise ValueError(f"no column matching {needles} in {header}")

            i_year = find("year")
            i_inv = find("invest")
            i_perf = find("isp", "perf")
            years, inv, perf = [], [], []
            for row in reader:
                if not row or not "".join(row).strip():
                    continue
                years.append(int(float(row[i_year])))
                inv.append(float(row[i_inv]))
                perf.append(float(row[i_perf]))
        return cls(
            investments=np.array(inv),
            performances=np.array(perf),
            years=tuple(years),
            source=str(path),
        )


def bundled_series() -> HistoricalSeries:
    """The packaged synthetic specific-impulse series (1979-1988 analog)."""
    with resources.as_file(
        resources.files("contractopt").joinpath("data", BUNDLED_SERIES)
    ) as path:
        series = HistoricalSeries.from_csv(path)
    return HistoricalSeries(
        investments=series.investments,
        performances=series.performances,
        years=series.years,
        source="bundled synthetic series (matches the published trend statistics)",
    )


@dataclass(frozen=True)
class CalibrationInputs:
    """Engineering and market figures needed to scale the fit into model
    parameters. Currency figures share the series' currency-millions scale."""

    requirement_physical: float  # G^r, e.g. required specific impulse
    state_of_art_performance: float  # G_S
    state_of_art_investment: float  # I_S
    engineer_cost_rate: float  # C, currency-millions per unit time
    horizon: float = 1.0  # T, duration of the process
    engineer_count: int = 1  # Z
    system_value: float = 1.0  # V0, currency-millions

    def __post_init__(self):
        if self.requirement_physical <= self.state_of_art_performance:
            raise ValueError("the requirement must exceed the state of the art")
        for name in ("engineer_cost_rate", "horizon", "system_value"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.engineer_count < 1:
            raise ValueError("engineer_count must be at least 1")

    @property
    def performance_gap(self) -> float:
        return self.requirement_physical - self.state_of_art_performance

    @property
    def team_budget(self) -> float:
        """Z * C * T: cost of the whole team over the horizon."""
        return self.engineer_count * self.engineer_cost_rate * self.horizon


@dataclass(frozen=True)
class LinearTrendFit:
    """Anchored least-squares fit of performance on cumulative investment."""

    A_hat: float  # slope, physical units per currency-million
    Sigma_hat: float  # mean squared residual (verbatim convention)
    Sigma_hat_sqrt: float  # root-mean-square residual variant
    anchor_investment: float
    anchor_performance: float
    residuals: tuple

    def predict(self, investment) -> np.ndarray:
        d = np.asarray(investment, dtype=float) - self.anchor_investment
        return self.anchor_performance + self.A_hat * d


@dataclass(frozen=True)
class CalibrationResult:
    """Fitted trend statistics and the derived model parameters."""

    A_hat: float
    Sigma_hat: float
    kappa: float
    sigma: float
    cost_coeff: float
    sigma_convention: str = "mean_square"

    def __post_init__(self):
        if self.Sigma_hat < 0:
            raise ValueError("Sigma_hat must be nonnegative")
        if self.kappa <= 0 or self.cost_coeff <= 0:
            raise ValueError("kappa and cost_coeff must be positive")


def fit_linear_model(series: HistoricalSeries, anchor=None) -> LinearTrendFit:
    """Maximum-likelihood line through the anchor: slope minimizes the sum of
    squared deviations, the residual scale is their mean square.

    The mean-square convention follows the source formula even though the
    figure is quoted in the performance unit; the root variant is exposed
    alongside it.
    """
    if anchor is None:
        anchor = series.anchor
    i_s, g_s = float(anchor[0]), float(anchor[1])
    d_inv = series.investments - i_s
    d_perf = series.performances - g_s
    denom = float(d_inv @ d_inv)
    if denom <= 0:
        raise ValueError("all investments equal the anchor; the slope is unidentified")
    a_hat = float(d_perf @ d_inv) / denom
    residuals = g_s + a_hat * d_inv - series.performances
    sigma_hat = float(np.mean(residuals**2))
    return LinearTrendFit(
        A_hat=a_hat,
        Sigma_hat=sigma_hat,
        Sigma_hat_sqrt=float(np.sqrt(sigma_hat)),
        anchor_investment=i_s,
        anchor_performance=g_s,
        residuals=tuple(float(r) for r in residuals),
    )


def derive_model_params(
    fit: LinearTrendFit,
    inputs: CalibrationInputs,
    sigma_convention: str = "mean_square",
) -> CalibrationResult:
    """Scale the fitted trend into the dimensionless agent parameters.

    sigma = Sigma_hat / gap, kappa = Z*C*T*A_hat / gap, cost = Z*C*T / V0,
    with `sigma_convention` choosing the mean-square or root-mean-square
    reading of Sigma_hat (recorded in the result).
    """
    if sigma_convention not in ("mean_square", "rms"):
        raise ValueError("sigma_convention must be 'mean_square' or 'rms'")
    gap = inputs.performance_gap
    scale = fit.Sigma_hat if sigma_convention == "mean_square" else fit.Sigma_hat_sqrt
    return CalibrationResult(
        A_hat=fit.A_hat,
        Sigma_hat=fit.Sigma_hat,
        kappa=inputs.team_budget * fit.A_hat / gap,
        sigma=scale / gap,
        cost_coeff=inputs.team_budget / inputs.system_value,
        sigma_convention=sigma_convention,
    )


def scaled_quality(performance, inputs: CalibrationInputs):
    """Map physical performance onto the model's quality scale: 0 at the
    state of the art, 1 at the requirement."""
    g = np.asarray(performance, dtype=float)
    out = (g - inputs.state_of_art_performance) / inputs.performance_gap
    return float(out) if out.ndim == 0 else out


def effort_from_investment(investment, inputs: CalibrationInputs, team: bool = False):
    """Effort implied by incremental investment: one engineer-horizon of
    spending equals effort 1 (or one team-horizon when team=True)."""
    spend = inputs.engineer_cost_rate * inputs.horizon
    if team:
        spend *= inputs.engineer_count
    i = np.asarray(investment, dtype=float)
    out = (i - inputs.state_of_art_investment) / spend
    return float(out) if out.ndim == 0 else out


def prediction_band(fit: LinearTrendFit, investment, z: float = 1.959964) -> tuple:
    """Pointwise normal prediction band around the fitted line, using the
    root-mean-square residual as the noise scale."""
    mean = fit.predict(investment)
    half = z * fit.Sigma_hat_sqrt
    return mean - half, mean + half


def to_problem_spec(
    result: CalibrationResult,
    value_kind: ValueKind = ValueKind.RB,
    risk_attitude: RiskAttitude = RiskAttitude.RISK_AVERSE,
    smoothing: SmoothingSpec | None = None,
) -> ProblemSpec:
    """Single-agent, single-type problem with value normalized to 1 at the
    requirement."""
    agent = AgentSpec(
        types=(
            AgentTypeSpec(
                kappa=result.kappa,
                cost_coeff=result.cost_coeff,
                sigma=result.sigma,
                prior_prob=1.0,
            ),
        ),
        risk_attitude=risk_attitude,
    )
    return ProblemSpec(
        agents=(agent,),
        value=ValueSpec(kind=value_kind, v0=1.0, requirement=1.0),
        principal_utility=UtilitySpec(kind=RiskAttitude.RISK_NEUTRAL),
        smoothing=smoothing or SmoothingSpec(),
        scenario=Scenario.TYPE_INDEPENDENT,
    )
