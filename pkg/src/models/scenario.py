"""Fuel-price shock scenarios driven through emissions, concentrations and health losses."""

from __future__ import annotations

import asyncio
import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from src.clients.files import ParameterClient
from src.config import settings
from src.errors import InputValidationError, InvalidArgumentError
from src.models.emissions import EmissionElasticityTable
from src.models.impact import impact_for_pollutant, vosl_transfer
from src.schemas import (
    ComparisonCell,
    ComparisonDocument,
    Fuel,
    ImpactReportDocument,
    ImpactRowDocument,
    ParameterSet,
    Pollutant,
    Scenario,
)

logger = logging.getLogger(__name__)

TOTAL = "Total"

POLLUTANT_METRICS = [
    "quantity",
    "quantity_pct",
    "concentration",
    "concentration_pct",
    "deaths_linear",
    "losses_linear",
    "deaths_nonlinear",
    "losses_nonlinear",
]
TOTAL_METRICS = ["quantity", "deaths_linear", "losses_linear", "deaths_nonlinear", "losses_nonlinear"]

# (relative, absolute); a cell passes when |computed - published| <= max(rel * |published|, abs)
DEFAULT_TOLERANCES: dict[str, tuple[float, float]] = {
    "quantity": (0.006, 0.001),
    "quantity_pct": (0.006, 0.001),
    "concentration": (0.006, 0.002),
    "concentration_pct": (0.006, 0.001),
    "deaths_linear": (0.01, 1.5),
    "losses_linear": (0.01, 0.01),
    "deaths_nonlinear": (0.015, 1.5),
    "losses_nonlinear": (0.015, 0.01),
}


class AggregationRule(str, enum.Enum):
    MEAN = "mean"
    SUM = "sum"


def apply_shock(
    s: Scenario,
    pi: EmissionElasticityTable,
    rule: AggregationRule | str | None = None,
    fuels: Mapping[str, Fuel] | None = None,
) -> dict[Pollutant, float]:
    """Percent emission change per pollutant.

    Each class contributes pi_kj x shock(fuel of j); ``mean`` divides the sum by the
    number of classes, ``sum`` does not.
    """
    rule = AggregationRule(rule or settings.aggregation_rule)
    fuels = dict(pi.fuels) if fuels is None else dict(fuels)
    shocks = np.empty(len(pi.classes))
    for j, vehicle_class in enumerate(pi.classes):
        fuel = fuels.get(vehicle_class)
        if fuel is None:
            raise InvalidArgumentError(f"class {vehicle_class} has no price group (fuel)")
        if fuel not in s.shocks:
            raise InvalidArgumentError(f"scenario {s.id} defines no shock for {fuel.value} (class {vehicle_class})")
        shocks[j] = s.shocks[fuel]
    combined = pi.price @ shocks
    if rule == AggregationRule.MEAN:
        combined = combined / len(pi.classes)
    return {p: float(v * 100.0) for p, v in zip(pi.pollutants, combined)}


@dataclass(frozen=True)
class ScenarioInputs:
    elasticities: EmissionElasticityTable
    params: ParameterSet
    rule: AggregationRule = AggregationRule.MEAN

    def __post_init__(self) -> None:
        configured = {p.pollutant for p in self.params.pollutants}
        missing = [p.value for p in self.elasticities.pollutants if p not in configured]
        if missing:
            raise InvalidArgumentError(f"no pollutant parameters for: {', '.join(missing)}")
        if not self.elasticities.fuels:
            object.__setattr__(self, "elasticities", self.elasticities.with_fuels(self.params.fleet.fuels))


@dataclass(frozen=True)
class ImpactRow:
    pollutant: Pollutant
    emission_baseline: float
    quantity: float
    quantity_pct: float
    concentration_baseline: float
    concentration: float
    concentration_pct: float
    deaths_linear: float
    losses_linear: float
    deaths_nonlinear: float
    losses_nonlinear: float
    attributable_fraction: float


@dataclass(frozen=True)
class ImpactReport:
    scenario: Scenario
    rule: AggregationRule
    rows: tuple[ImpactRow, ...]

    def totals(self) -> dict[str, float]:
        return {metric: math.fsum(getattr(r, metric) for r in self.rows) for metric in TOTAL_METRICS}

    def to_frame(self, precision: int | None = None) -> pd.DataFrame:
        """One row per pollutant plus a ``Total`` row; both model variants side by side."""
        records = []
        for row in self.rows:
            record = {"scenario": self.scenario.id, "pollutant": row.pollutant.value}
            record.update({metric: getattr(row, metric) for metric in POLLUTANT_METRICS})
            records.append(record)
        total = {"scenario": self.scenario.id, "pollutant": TOTAL}
        total.update({metric: np.nan for metric in POLLUTANT_METRICS})
        total.update(self.totals())
        records.append(total)
        frame = pd.DataFrame.from_records(records, columns=["scenario", "pollutant"] + POLLUTANT_METRICS)
        return frame.round(precision) if precision is not None else frame

    def to_document(self) -> ImpactReportDocument:
        return ImpactReportDocument(
            scenario=self.scenario.id,
            label=self.scenario.label,
            shocks={fuel.value: shock for fuel, shock in self.scenario.shocks.items()},
            rule=self.rule.value,
            rows=[_row_document(row) for row in self.rows],
            totals=self.totals(),
        )

    def to_long(self) -> pd.DataFrame:
        """Plot-ready long format: scenario, pollutant, metric, value."""
        long = self.to_frame().melt(id_vars=["scenario", "pollutant"], var_name="metric", value_name="value")
        return long.dropna(subset=["value"]).reset_index(drop=True)


def _row_document(row: ImpactRow) -> ImpactRowDocument:
    values = {name: getattr(row, name) for name in ImpactRowDocument.model_fields if name != "pollutant"}
    return ImpactRowDocument(pollutant=row.pollutant.value, **values)


def run_scenario(s: Scenario, inputs: ScenarioInputs) -> ImpactReport:
    percent = apply_shock(s, inputs.elasticities, inputs.rule)
    population = inputs.params.population
    vosl = vosl_transfer(inputs.params.valuation)
    rows = []
    for pollutant in inputs.elasticities.pollutants:
        pp = inputs.params.pollutant(pollutant)
        change = percent[pollutant]
        impact = impact_for_pollutant(pp, 1.0 + change / 100.0, population, vosl)
        rows.append(
            ImpactRow(
                pollutant=pollutant,
                emission_baseline=pp.baseline_emissions,
                quantity=pp.baseline_emissions * change / 100.0,
                quantity_pct=change,
                concentration_baseline=impact.concentration.baseline,
                concentration=impact.concentration.delta,
                concentration_pct=impact.concentration.percent,
                deaths_linear=impact.linear.deaths,
                losses_linear=impact.linear.monetary_loss,
                deaths_nonlinear=impact.nonlinear.deaths,
                losses_nonlinear=impact.nonlinear.monetary_loss,
                attributable_fraction=impact.nonlinear.attributable_fraction,
            )
        )
    report = ImpactReport(scenario=s, rule=inputs.rule, rows=tuple(rows))
    logger.info(
        "scenario %s: emissions %+.3f (10^4 t), linear deaths %+.1f",
        s.id, report.totals()["quantity"], report.totals()["deaths_linear"],
    )
    return report


async def run_scenarios(
    scenarios: Iterable[Scenario], inputs: ScenarioInputs, workers: int | None = None
) -> list[ImpactReport]:
    """Evaluate scenarios concurrently; reports come back in input order."""
    limit = asyncio.Semaphore(workers or settings.scenario_workers)

    async def run_one(s: Scenario) -> ImpactReport:
        async with limit:
            return await asyncio.to_thread(run_scenario, s, inputs)

    return list(await asyncio.gather(*(run_one(s) for s in scenarios)))


def run_all(scenarios: Iterable[Scenario], inputs: ScenarioInputs) -> list[ImpactReport]:
    return asyncio.run(run_scenarios(list(scenarios), inputs))


def reports_frame(reports: Iterable[ImpactReport], precision: int | None = None) -> pd.DataFrame:
    frames = [r.to_frame(precision) for r in reports]
    if not frames:
        return pd.DataFrame(columns=["scenario", "pollutant"] + POLLUTANT_METRICS)
    return pd.concat(frames, ignore_index=True)


def reports_long(reports: Iterable[ImpactReport]) -> pd.DataFrame:
    frames = [r.to_long() for r in reports]
    if not frames:
        return pd.DataFrame(columns=["scenario", "pollutant", "metric", "value"])
    return pd.concat(frames, ignore_index=True)


def compare_to_published(
    reports: Iterable[ImpactReport],
    published: pd.DataFrame,
    tolerances: Mapping[str, tuple[float, float]] | None = None,
) -> list[ComparisonCell]:
    """Cell-by-cell comparison for every published value of the scenarios in ``reports``."""
    tolerances = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    unknown = sorted(set(published["metric"]) - set(tolerances))
    if unknown:
        raise InputValidationError(f"published values name unknown metric(s): {', '.join(unknown)}")
    computed = reports_long(reports).set_index(["scenario", "pollutant", "metric"])["value"]
    scenario_ids = set(computed.index.get_level_values("scenario"))
    cells = []
    for record in published.itertuples(index=False):
        if record.scenario not in scenario_ids:
            continue
        key = (record.scenario, record.pollutant, record.metric)
        if key not in computed.index:
            raise InputValidationError(f"published cell {key} has no computed counterpart")
        value = float(computed[key])
        target = float(record.value)
        rel, floor = tolerances[record.metric]
        allowed = max(rel * abs(target), floor)
        if target != 0:
            relative_error = (value - target) / abs(target)
        else:
            relative_error = 0.0 if value == 0 else math.inf
        cells.append(
            ComparisonCell(
                scenario=record.scenario,
                pollutant=record.pollutant,
                metric=record.metric,
                computed=value,
                published=target,
                relative_error=relative_error,
                tolerance=allowed,
                passed=abs(value - target) <= allowed,
            )
        )
    failed = sum(not c.passed for c in cells)
    logger.info("compared %d cells, %d outside tolerance", len(cells), failed)
    return cells


def comparison_frame(cells: Iterable[ComparisonCell]) -> pd.DataFrame:
    columns = list(ComparisonCell.model_fields)
    return pd.DataFrame.from_records([c.model_dump() for c in cells], columns=columns)


@dataclass(frozen=True)
class Reproduction:
    reports: list[ImpactReport]
    cells: list[ComparisonCell]

    @property
    def failed(self) -> list[ComparisonCell]:
        return [c for c in self.cells if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_document(self) -> ComparisonDocument:
        return ComparisonDocument(
            passed=self.passed,
            cells_total=len(self.cells),
            cells_failed=len(self.failed),
            cells=self.cells,
        )


def reproduce_published(
    parameter_dir: str | Path | None = None,
    scenario_ids: Iterable[str] | None = None,
    rule: AggregationRule | str | None = None,
    tolerances: Mapping[str, tuple[float, float]] | None = None,
) -> Reproduction:
    """Run the shipped scenarios on the shipped parameter set and compare with the published table."""
    client = ParameterClient(parameter_dir)
    params = client.load_parameters()
    scenarios = client.load_scenarios().scenarios
    if scenario_ids is not None:
        wanted = list(scenario_ids)
        unknown = [i for i in wanted if i not in {s.id for s in scenarios}]
        if unknown:
            raise InvalidArgumentError(f"unknown scenario id(s): {', '.join(unknown)}")
        scenarios = [s for s in scenarios if s.id in wanted]
    inputs = ScenarioInputs(
        elasticities=client.load_emission_elasticities(),
        params=params,
        rule=AggregationRule(rule or settings.aggregation_rule),
    )
    reports = run_all(scenarios, inputs)
    cells = compare_to_published(reports, client.load_published(), tolerances)
    return Reproduction(reports=reports, cells=cells)
