"""Emission elasticities: demand elasticities weighted by each class's share of a pollutant.

    psi_k   = sum_i a_ki q_i
    pi_kj   = sum_i (a_ki q_i / psi_k) e_ij
    eta_k   = sum_i (a_ki q_i / psi_k) e_i

``q_i`` is fleet kilometres per year (population x VMT) so that ``a_ki q_i`` is grams
per year with ``a_ki`` in g/km. The ``fuel`` weighting uses litres instead.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from src.config import settings
from src.errors import InputValidationError, InvalidArgumentError
from src.models.elasticity import ElasticityTable
from src.models.panel import FuelPanel
from src.schemas import FleetParams, Fuel, Pollutant

logger = logging.getLogger(__name__)


class EmissionWeighting(str, enum.Enum):
    KM = "km"
    FUEL = "fuel"


@dataclass(frozen=True)
class EmissionWeights:
    classes: tuple[str, ...]
    pollutants: tuple[Pollutant, ...]
    activity: np.ndarray
    contributions: np.ndarray
    totals: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        """Pollutants x classes, each row summing to one."""
        return self.contributions / self.totals[:, None]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.weights, index=[p.value for p in self.pollutants], columns=list(self.classes))
        frame.index.name = "pollutant"
        return frame


@dataclass(frozen=True)
class EmissionElasticityTable:
    classes: tuple[str, ...]
    pollutants: tuple[Pollutant, ...]
    price: np.ndarray
    expenditure: np.ndarray
    fuels: dict[str, Fuel] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shape = (len(self.pollutants), len(self.classes))
        if self.price.shape != shape or self.expenditure.shape != (len(self.pollutants),):
            raise InvalidArgumentError(
                f"emission elasticity shapes disagree: price {self.price.shape}, expected {shape}"
            )

    def price_for(self, pollutant: Pollutant) -> pd.Series:
        row = self.pollutants.index(pollutant)
        return pd.Series(self.price[row], index=list(self.classes), name=pollutant.value)

    def expenditure_for(self, pollutant: Pollutant) -> float:
        return float(self.expenditure[self.pollutants.index(pollutant)])

    def with_fuels(self, fuels: Mapping[str, Fuel]) -> "EmissionElasticityTable":
        merged = {**self.fuels, **{c: f for c, f in fuels.items() if c in self.classes}}
        return EmissionElasticityTable(self.classes, self.pollutants, self.price, self.expenditure, merged)

    def to_frame(self) -> pd.DataFrame:
        """Delimited layout: ``kind,class,fuel,<pollutant>...``; the expenditure row has an empty class."""
        columns = [p.value for p in self.pollutants]
        price = pd.DataFrame(self.price.T, columns=columns)
        price.insert(0, "kind", "price")
        price.insert(1, "class", list(self.classes))
        price.insert(2, "fuel", [self.fuels[c].value if c in self.fuels else "" for c in self.classes])
        expenditure = pd.DataFrame([self.expenditure], columns=columns)
        expenditure.insert(0, "kind", "expenditure")
        expenditure.insert(1, "class", "")
        expenditure.insert(2, "fuel", "")
        return pd.concat([price, expenditure], ignore_index=True)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "EmissionElasticityTable":
        for column in ("kind", "class"):
            if column not in frame.columns:
                raise InputValidationError(f"emission elasticity table lacks a {column!r} column")
        known = {p.value: p for p in Pollutant}
        unknown = [c for c in frame.columns if c not in ("kind", "class", "fuel") and c not in known]
        if unknown:
            raise InputValidationError(f"unknown pollutant column(s): {', '.join(unknown)}")
        pollutants = tuple(known[c] for c in frame.columns if c in known)
        if not pollutants:
            raise InputValidationError("emission elasticity table has no pollutant columns")
        columns = [p.value for p in pollutants]

        kinds = frame["kind"].astype(str).str.strip()
        price_rows = frame[kinds == "price"]
        expenditure_rows = frame[kinds == "expenditure"]
        if price_rows.empty:
            raise InputValidationError("emission elasticity table has no price rows")
        classes = tuple(price_rows["class"].astype(str).str.strip())
        if len(set(classes)) != len(classes):
            raise InputValidationError("duplicate class rows in emission elasticity table")
        try:
            price = price_rows[columns].to_numpy(dtype=float).T
            expenditure = (
                expenditure_rows[columns].to_numpy(dtype=float)[0]
                if len(expenditure_rows)
                else np.full(len(pollutants), np.nan)
            )
        except ValueError as exc:
            raise InputValidationError(f"non-numeric cell in emission elasticity table: {exc}") from None
        fuels: dict[str, Fuel] = {}
        if "fuel" in price_rows.columns:
            for name, fuel in zip(classes, price_rows["fuel"].fillna("").astype(str).str.strip()):
                if fuel:
                    try:
                        fuels[name] = Fuel(fuel)
                    except ValueError:
                        raise InputValidationError(f"class {name}: unknown fuel {fuel!r}") from None
        return cls(classes=classes, pollutants=pollutants, price=price, expenditure=expenditure, fuels=fuels)


def fleet_activity(
    fleet: FleetParams,
    panel: FuelPanel | None = None,
    weighting: EmissionWeighting | str | None = None,
) -> pd.Series:
    """Per-class activity q_i: fleet km/year summed over the panel, or litres under ``fuel``.

    Without a panel the fleet's own population x baseline VMT is used.
    """
    weighting = EmissionWeighting(weighting or settings.emission_weighting)
    if panel is not None:
        frame = panel.frame.assign(km=panel.frame["vehicle_population"] * panel.frame["vmt"])
        km = frame.groupby("class", sort=False)["km"].sum().reindex(list(panel.classes))
    else:
        missing = [c.id for c in fleet.classes if c.population is None]
        if missing:
            raise InvalidArgumentError(
                f"no panel given and fleet population missing for: {', '.join(missing)}"
            )
        km = pd.Series({c.id: c.population * c.baseline_vmt for c in fleet.classes})
    if weighting == EmissionWeighting.FUEL:
        economy = pd.Series({c.id: c.fuel_economy for c in fleet.classes})
        if km.index.difference(economy.index).size:
            missing = ", ".join(km.index.difference(economy.index))
            raise InvalidArgumentError(f"no fuel economy for class(es): {missing}")
        km = km * economy.reindex(km.index) / 100.0
    return km.rename(weighting.value)


def emission_weights(
    fleet: FleetParams,
    activity: Mapping[str, float] | pd.Series,
    pollutants: list[Pollutant] | None = None,
) -> EmissionWeights:
    activity = pd.Series(activity, dtype=float)
    classes = tuple(str(c) for c in activity.index)
    missing = [c for c in classes if fleet.get(c) is None]
    if missing:
        raise InvalidArgumentError(f"no fleet parameters for class(es): {', '.join(missing)}")
    if (activity < 0).any() or not np.all(np.isfinite(activity.to_numpy())):
        raise InvalidArgumentError("activity must be finite and nonnegative")
    if pollutants is None:
        pollutants = [p for p in Pollutant if all(p in fleet.get(c).emission_factors for c in classes)]

    factors = np.array(
        [[fleet.get(c).emission_factors.get(p, np.nan) for c in classes] for p in pollutants], dtype=float
    )
    if np.isnan(factors).any():
        row, col = np.argwhere(np.isnan(factors))[0]
        raise InvalidArgumentError(f"class {classes[col]} has no {pollutants[row].value} emission factor")
    contributions = factors * activity.to_numpy()[None, :]
    totals = contributions.sum(axis=1)
    for pollutant, total in zip(pollutants, totals):
        if not total > 0:
            raise InvalidArgumentError(f"all activity is zero for {pollutant.value}")
    return EmissionWeights(
        classes=classes,
        pollutants=tuple(pollutants),
        activity=activity.to_numpy(),
        contributions=contributions,
        totals=totals,
    )


def emission_price_elasticities(e: np.ndarray, w: EmissionWeights) -> np.ndarray:
    """Pollutants x classes matrix; entry (k, j) responds to the price of class j."""
    e = np.asarray(e, dtype=float)
    n = len(w.classes)
    if e.shape != (n, n):
        raise InvalidArgumentError(f"elasticity matrix is {e.shape}, weights cover {n} classes")
    return w.weights @ e


def emission_expenditure_elasticity(e_exp: np.ndarray, w: EmissionWeights) -> np.ndarray:
    e_exp = np.asarray(e_exp, dtype=float)
    if e_exp.shape != (len(w.classes),):
        raise InvalidArgumentError(f"expenditure elasticities are {e_exp.shape}, weights cover {len(w.classes)} classes")
    return w.weights @ e_exp


def emission_elasticities(
    table: ElasticityTable, weights: EmissionWeights, fuels: Mapping[str, Fuel] | None = None
) -> EmissionElasticityTable:
    if set(table.classes) != set(weights.classes):
        raise InvalidArgumentError(
            f"elasticity classes {sorted(table.classes)} differ from weighted classes {sorted(weights.classes)}"
        )
    order = [table.classes.index(c) for c in weights.classes]
    price = table.price[np.ix_(order, order)]
    expenditure = table.expenditure[order]
    result = EmissionElasticityTable(
        classes=weights.classes,
        pollutants=weights.pollutants,
        price=emission_price_elasticities(price, weights),
        expenditure=emission_expenditure_elasticity(expenditure, weights),
        fuels={c: f for c, f in (fuels or {}).items() if c in weights.classes},
    )
    logger.info("emission elasticities for %s", ", ".join(p.value for p in weights.pollutants))
    return result


def load_emission_elasticities(path: str | Path) -> EmissionElasticityTable:
    path = Path(path)
    if not path.is_file():
        raise InputValidationError(f"emission elasticity file not found: {path}")
    frame = pd.read_csv(path, dtype={"kind": str, "class": str, "fuel": str}, keep_default_na=False)
    return EmissionElasticityTable.from_frame(frame)


def write_emission_elasticities(table: EmissionElasticityTable, path: str | Path) -> Path:
    path = Path(path)
    table.to_frame().to_csv(path, index=False)
    return path
