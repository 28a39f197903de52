"""Concentration, acute mortality and monetary loss for a change in emissions.

Exposure-response coefficients are stored as percent mortality change per
concentration unit; ``er_fraction`` is the one place they become fractions.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field

from src.errors import InvalidArgumentError
from src.schemas import PollutantParams, Pollutant, PopulationParams, ValuationParams

logger = logging.getLogger(__name__)

MILLION = 1e6


class MortalityModel(str, enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


class BoxModelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    emission_rate: float = Field(ge=0, description="ug/s/m2")
    length: float = Field(gt=0, description="m")
    mixing_height: float = Field(gt=0, description="m")
    wind_speed: float = Field(gt=0, description="m/s")
    background: float = Field(ge=0)


def er_fraction(er_coefficient: float) -> float:
    return er_coefficient / 100.0


def box_concentration(p: BoxModelParams) -> float:
    """Well-mixed box: C = b + S L / (H u)."""
    return p.background + p.emission_rate * p.length / (p.mixing_height * p.wind_speed)


@dataclass(frozen=True)
class ConcentrationDelta:
    pollutant: Pollutant
    baseline: float
    scenario: float

    @property
    def delta(self) -> float:
        return self.scenario - self.baseline

    @property
    def percent(self) -> float:
        return self.delta / self.baseline * 100.0


def scale_concentration(pp: PollutantParams, emission_ratio: float) -> ConcentrationDelta:
    """Scale the above-background part of the baseline by E2/E1."""
    if not emission_ratio >= 0 or not math.isfinite(emission_ratio):
        raise InvalidArgumentError(f"emission ratio must be finite and nonnegative, got {emission_ratio}")
    if pp.baseline_concentration <= pp.background_concentration:
        raise InvalidArgumentError(f"{pp.pollutant.value}: baseline concentration does not exceed background")
    background = pp.background_concentration
    scenario = background + (pp.baseline_concentration - background) * emission_ratio
    return ConcentrationDelta(pollutant=pp.pollutant, baseline=pp.baseline_concentration, scenario=scenario)


def linear_acute_deaths(delta_concentration: float, er_coefficient: float, pop: PopulationParams) -> float:
    if not (math.isfinite(delta_concentration) and math.isfinite(er_coefficient)):
        raise InvalidArgumentError("concentration change and ER coefficient must be finite")
    return er_fraction(er_coefficient) * delta_concentration * pop.exposed_population * pop.mortality_rate


def relative_risk(concentration: float, pp: PollutantParams) -> float:
    if concentration < pp.background_concentration:
        raise InvalidArgumentError(
            f"{pp.pollutant.value}: concentration {concentration} is below background "
            f"{pp.background_concentration}; the exposure-response model is undefined there"
        )
    return math.exp(er_fraction(pp.er_coefficient) * (concentration - pp.background_concentration))


def attributable_fraction(rr: float) -> float:
    if rr < 1.0:
        raise InvalidArgumentError(f"relative risk below one: {rr}")
    return (rr - 1.0) / rr


@dataclass(frozen=True)
class NonlinearDeaths:
    relative_risk: float
    attributable_fraction: float
    deaths: float


def nonlinear_acute_deaths(concentration: float, pp: PollutantParams, pop: PopulationParams) -> NonlinearDeaths:
    rr = relative_risk(concentration, pp)
    af = attributable_fraction(rr)
    return NonlinearDeaths(
        relative_risk=rr,
        attributable_fraction=af,
        deaths=af * pop.exposed_population * pop.mortality_rate,
    )


def vosl_transfer(v: ValuationParams) -> float:
    return v.vosl_baseline * (v.income / v.income_baseline) ** v.wtp_elasticity


def monetize(deaths: float, vosl: float) -> float:
    """Loss in millions of currency units."""
    if not vosl > 0:
        raise InvalidArgumentError(f"VOSL must be positive, got {vosl}")
    return deaths * vosl / MILLION


@dataclass(frozen=True)
class MortalityResult:
    pollutant: Pollutant
    model: MortalityModel
    deaths: float
    monetary_loss: float
    attributable_fraction: float | None = None


@dataclass(frozen=True)
class PollutantImpact:
    concentration: ConcentrationDelta
    linear: MortalityResult
    nonlinear: MortalityResult


def impact_for_pollutant(
    pp: PollutantParams, emission_ratio: float, pop: PopulationParams, vosl: float
) -> PollutantImpact:
    """Concentration change, both mortality models and their losses for one pollutant.

    Nonlinear deaths are the scenario level minus the baseline level.
    """
    concentration = scale_concentration(pp, emission_ratio)
    linear_deaths = linear_acute_deaths(concentration.delta, pp.er_coefficient, pop)
    baseline = nonlinear_acute_deaths(concentration.baseline, pp, pop)
    scenario = nonlinear_acute_deaths(concentration.scenario, pp, pop)
    nonlinear_deaths = scenario.deaths - baseline.deaths
    logger.debug(
        "%s: dC=%.6g, linear %.3f, nonlinear %.3f deaths",
        pp.pollutant.value, concentration.delta, linear_deaths, nonlinear_deaths,
    )
    return PollutantImpact(
        concentration=concentration,
        linear=MortalityResult(
            pollutant=pp.pollutant,
            model=MortalityModel.LINEAR,
            deaths=linear_deaths,
            monetary_loss=monetize(linear_deaths, vosl),
        ),
        nonlinear=MortalityResult(
            pollutant=pp.pollutant,
            model=MortalityModel.NONLINEAR,
            deaths=nonlinear_deaths,
            monetary_loss=monetize(nonlinear_deaths, vosl),
            attributable_fraction=scenario.attributable_fraction,
        ),
    )
