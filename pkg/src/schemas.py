"""Pydantic schemas for the fuel-shock toolkit.

Input documents (parameter file, scenario file, panel rows, run configuration) are
validated here; output documents (fit, elasticity and comparison files) are
serialized from the models at the bottom of the module.
"""

from __future__ import annotations

import enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Fuel(str, enum.Enum):
    GASOLINE = "gasoline"
    DIESEL = "diesel"


class Pollutant(str, enum.Enum):
    CO = "CO"
    NOX = "NOx"
    PM25 = "PM2.5"


# Concentration units are fixed per pollutant and must match the ER coefficient units.
CONCENTRATION_UNITS: dict[Pollutant, str] = {
    Pollutant.CO: "mg/m3",
    Pollutant.NOX: "ug/m3",
    Pollutant.PM25: "ug/m3",
}


class PriceIndex(str, enum.Enum):
    TRANSLOG = "translog"
    STONE = "stone"


def _check_sources(model: BaseModel, fields: list[str]) -> None:
    sources = getattr(model, "sources")
    missing = [name for name in fields if getattr(model, name) is not None and name not in sources]
    if missing:
        raise ValueError(f"missing source annotation for: {', '.join(missing)}")


class FleetClassParams(BaseModel):
    """One row of the VMT / fuel economy / emission factor table."""

    model_config = ConfigDict(frozen=True)

    id: str
    label: str | None = None
    fuel: Fuel
    baseline_vmt: float = Field(gt=0, description="km/year per vehicle")
    fuel_economy: float = Field(gt=0, description="L/100 km")
    emission_factors: dict[Pollutant, float] = Field(description="g/km")
    population: float | None = Field(default=None, gt=0, description="vehicle count")
    sources: dict[str, str] = {}

    @field_validator("emission_factors")
    @classmethod
    def factors_positive(cls, value: dict[Pollutant, float]) -> dict[Pollutant, float]:
        bad = [p.value for p, f in value.items() if not f > 0]
        if bad:
            raise ValueError(f"emission factors must be > 0 for {', '.join(bad)}")
        return value

    @model_validator(mode="after")
    def sources_present(self) -> "FleetClassParams":
        _check_sources(self, ["baseline_vmt", "fuel_economy", "emission_factors", "population"])
        return self


class FleetParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    classes: list[FleetClassParams]

    @field_validator("classes")
    @classmethod
    def unique_ids(cls, value: list[FleetClassParams]) -> list[FleetClassParams]:
        if not value:
            raise ValueError("fleet must contain at least one vehicle class")
        ids = [c.id for c in value]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ValueError(f"duplicate vehicle class ids: {', '.join(duplicates)}")
        return value

    @property
    def class_ids(self) -> list[str]:
        return [c.id for c in self.classes]

    @property
    def fuels(self) -> dict[str, Fuel]:
        return {c.id: c.fuel for c in self.classes}

    def get(self, class_id: str) -> FleetClassParams | None:
        return next((c for c in self.classes if c.id == class_id), None)


class PollutantParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    pollutant: Pollutant
    unit: str
    background_concentration: float = Field(gt=0)
    baseline_concentration: float
    baseline_emissions: float = Field(gt=0, description="10^4 tons/year")
    er_coefficient: float = Field(gt=0, description="% mortality change per concentration unit")
    sources: dict[str, str] = {}

    @model_validator(mode="after")
    def check_invariants(self) -> "PollutantParams":
        expected = CONCENTRATION_UNITS[self.pollutant]
        if self.unit != expected:
            raise ValueError(f"{self.pollutant.value} concentrations must be in {expected}, got {self.unit}")
        if not self.baseline_concentration > self.background_concentration:
            raise ValueError("baseline_concentration must exceed background_concentration")
        _check_sources(
            self,
            ["background_concentration", "baseline_concentration", "baseline_emissions", "er_coefficient"],
        )
        return self


class PopulationParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    exposed_population: float = Field(gt=0)
    mortality_rate: float = Field(gt=0, lt=1)
    sources: dict[str, str] = {}

    @model_validator(mode="after")
    def sources_present(self) -> "PopulationParams":
        _check_sources(self, ["exposed_population", "mortality_rate"])
        return self


class ValuationParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    vosl_baseline: float = Field(gt=0)
    income_baseline: float = Field(gt=0)
    income: float = Field(gt=0)
    wtp_elasticity: float = Field(default=1.0, gt=0)
    currency: str = "RMB"
    sources: dict[str, str] = {}

    @model_validator(mode="after")
    def sources_present(self) -> "ValuationParams":
        _check_sources(self, ["vosl_baseline", "income_baseline", "income", "wtp_elasticity"])
        return self


class ParameterSet(BaseModel):
    """The versioned parameter file (``params.json``)."""

    model_config = ConfigDict(frozen=True)

    version: str
    fleet: FleetParams
    pollutants: list[PollutantParams]
    population: PopulationParams
    valuation: ValuationParams

    @model_validator(mode="after")
    def factors_for_every_pollutant(self) -> "ParameterSet":
        configured = {p.pollutant for p in self.pollutants}
        if len(configured) != len(self.pollutants):
            raise ValueError("duplicate pollutant entries")
        for vehicle in self.fleet.classes:
            missing = configured - set(vehicle.emission_factors)
            if missing:
                names = ", ".join(sorted(p.value for p in missing))
                raise ValueError(f"class {vehicle.id} lacks emission factors for {names}")
        return self

    def pollutant(self, pollutant: Pollutant) -> PollutantParams:
        return next(p for p in self.pollutants if p.pollutant == pollutant)


class PanelObservation(BaseModel):
    """One (province, year, class) row of the panel file."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    province: str
    year: int
    vehicle_class: str = Field(alias="class")
    price: float = Field(gt=0, description="currency per litre")
    vehicle_population: float = Field(ge=0)
    vmt: float = Field(gt=0, description="km/year")
    quantity: float | None = None
    expenditure: float | None = None
    share: float | None = Field(default=None, ge=0, le=1)

    @field_validator("province", "vehicle_class", mode="before")
    @classmethod
    def as_text(cls, value: object) -> str:
        return str(value)


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    label: str
    shocks: dict[Fuel, float] = Field(description="fractional price change per fuel")
    notes: str | None = None

    @field_validator("shocks")
    @classmethod
    def prices_stay_positive(cls, value: dict[Fuel, float]) -> dict[Fuel, float]:
        for fuel, shock in value.items():
            if not shock > -1.0:
                raise ValueError(f"shock for {fuel.value} must be > -1 (prices stay positive), got {shock}")
        return value


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    version: str = "1"
    scenarios: list[Scenario]

    @field_validator("scenarios")
    @classmethod
    def unique_ids(cls, value: list[Scenario]) -> list[Scenario]:
        ids = [s.id for s in value]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario ids must be unique")
        return value


class EstimatorOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: PriceIndex = PriceIndex.TRANSLOG
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=500, ge=1)
    dropped_equation: str | None = None
    group_prices: bool = False
    fgls_tol: float = Field(default=1e-10, gt=0)
    fgls_max_iter: int = Field(default=200, ge=1)


class RunConfig(BaseModel):
    """Resolved command-line configuration for one CLI invocation."""

    model_config = ConfigDict(frozen=True)

    panel: Path | None = None
    params: Path | None = None
    scenarios: Path | None = None
    estimator: EstimatorOptions = EstimatorOptions()
    output_dir: Path | None = None
    output_format: str = "csv"

    @field_validator("output_format")
    @classmethod
    def known_format(cls, value: str) -> str:
        if value not in ("csv", "json"):
            raise ValueError(f"format must be 'csv' or 'json', got {value}")
        return value

    @model_validator(mode="after")
    def inputs_exist(self) -> "RunConfig":
        for name in ("panel", "params", "scenarios"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ValueError(f"{name} path does not exist: {path}")
        return self


# Output documents


class FitDocument(BaseModel):
    kind: str = "aids-fit"
    classes: list[str]
    fuels: dict[str, str] = {}
    price_index: PriceIndex
    dropped_equation: str
    alpha0: float = 0.0
    alpha0_note: str = "alpha0 fixed at 0 (not separately identified)"
    alpha: list[float]
    beta: list[float]
    gamma: list[list[float]]
    free_parameter_names: list[str]
    free_parameters: list[float]
    covariance: list[list[float]]
    full_covariance: list[list[float]]
    iterations: int
    final_change: float
    restriction_residuals: dict[str, float]
    mean_shares: list[float]
    mean_log_prices: list[float]
    observations: int


class DoubleLogRow(BaseModel):
    vehicle_class: str
    intercept: float
    own_price_coefficient: float
    expenditure_coefficient: float
    intercept_se: float
    own_price_se: float
    expenditure_se: float
    observations: int


class DoubleLogDocument(BaseModel):
    kind: str = "double-log-fit"
    rows: list[DoubleLogRow]


class ElasticityDocument(BaseModel):
    kind: str = "elasticities"
    classes: list[str]
    price: list[list[float]]
    expenditure: list[float]
    price_se: list[list[float]]
    expenditure_se: list[float]
    evaluation_shares: list[float]
    evaluation_log_prices: list[float]


class EvaluationPoint(BaseModel):
    shares: dict[str, float]
    log_prices: dict[str, float]


class ComparisonCell(BaseModel):
    scenario: str
    pollutant: str
    metric: str
    computed: float
    published: float
    relative_error: float
    tolerance: float
    passed: bool


class ImpactRowDocument(BaseModel):
    pollutant: str
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


class ImpactReportDocument(BaseModel):
    kind: str = "impact-report"
    scenario: str
    label: str
    shocks: dict[str, float]
    rule: str
    rows: list[ImpactRowDocument]
    totals: dict[str, float]


class ReportBundle(BaseModel):
    kind: str = "impact-reports"
    reports: list[ImpactReportDocument]


class ComparisonDocument(BaseModel):
    kind: str = "comparison"
    passed: bool
    cells_total: int
    cells_failed: int
    cells: list[ComparisonCell]
