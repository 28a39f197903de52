"""Panel ingestion and activity derivation.

A panel holds one row per (province, year, vehicle class). Raw files carry price,
vehicle population and VMT; ``derive_activity`` adds fuel quantity, expenditure,
the group total X and expenditure shares.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.errors import InputValidationError, InvalidArgumentError, PanelValidationError
from src.schemas import FleetParams, Fuel, PanelObservation

logger = logging.getLogger(__name__)

PANEL_COLUMNS = ["province", "year", "class", "price", "vehicle_population", "vmt"]
DERIVED_COLUMNS = ["quantity", "expenditure", "total_expenditure", "share"]
GROUP_KEYS = ["province", "year"]
SHARE_TOLERANCE = 1e-10
_RAW_FIELDS = {"province", "year", "vehicle_class", "price", "vehicle_population", "vmt"}


@dataclass(frozen=True)
class PanelSchema:
    columns: tuple[str, ...] = tuple(PANEL_COLUMNS)
    delimiter: str = ","


DEFAULT_SCHEMA = PanelSchema()


@dataclass(frozen=True)
class FuelPanel:
    """Validated panel. ``frame`` is never mutated after construction."""

    frame: pd.DataFrame
    classes: tuple[str, ...]
    fuels: dict[str, Fuel] = field(default_factory=dict)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, fuels: dict[str, Fuel] | None = None) -> "FuelPanel":
        frame = frame.reset_index(drop=True).copy()
        frame["province"] = frame["province"].astype(str)
        frame["year"] = frame["year"].astype(int)
        frame["class"] = frame["class"].astype(str)
        classes = tuple(dict.fromkeys(frame["class"]))
        return cls(frame=frame, classes=classes, fuels=dict(fuels or {}))

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def is_derived(self) -> bool:
        return all(c in self.frame.columns for c in DERIVED_COLUMNS)

    @property
    def n_groups(self) -> int:
        return int(self.frame.groupby(GROUP_KEYS).ngroups)

    def wide(self, column: str) -> pd.DataFrame:
        """Groups × classes matrix of ``column``; every group must list every class."""
        table = self.frame.pivot(index=GROUP_KEYS, columns="class", values=column)
        table = table.reindex(columns=list(self.classes))
        if table.isna().to_numpy().any():
            row, col = np.argwhere(table.isna().to_numpy())[0]
            group = table.index[row]
            raise InputValidationError(
                f"panel is unbalanced: group {group} has no row for class {table.columns[col]}"
            )
        return table

    def log_prices(self) -> np.ndarray:
        return np.log(self.wide("price").to_numpy(dtype=float))

    def shares(self) -> np.ndarray:
        self._require_derived()
        return self.wide("share").to_numpy(dtype=float)

    def log_expenditure(self) -> np.ndarray:
        self._require_derived()
        totals = self.frame.groupby(GROUP_KEYS, sort=True)["total_expenditure"].first()
        index = self.wide("price").index
        return np.log(totals.reindex(index).to_numpy(dtype=float))

    def _require_derived(self) -> None:
        if not self.is_derived:
            raise InputValidationError("panel has no derived activity; run derive_activity first")

    def identical_price_groups(self) -> list[list[str]]:
        """Classes whose price series coincide across every observation."""
        prices = self.wide("price")
        groups: list[list[str]] = []
        for name in self.classes:
            series = prices[name].to_numpy()
            for group in groups:
                if np.array_equal(prices[group[0]].to_numpy(), series):
                    group.append(name)
                    break
            else:
                groups.append([name])
        return groups

    def group_by_price(self) -> "FuelPanel":
        """Aggregate classes with identical price series into price groups."""
        self._require_derived()
        groups = self.identical_price_groups()
        labels = _price_group_labels(groups, self.fuels)
        mapping = {member: labels[i] for i, group in enumerate(groups) for member in group}
        frame = self.frame.assign(**{"class": self.frame["class"].map(mapping)})
        frame = frame.assign(vmt_weight=frame["vehicle_population"] * frame["vmt"])
        grouped = frame.groupby(GROUP_KEYS + ["class"], sort=False).agg(
            price=("price", "first"),
            vehicle_population=("vehicle_population", "sum"),
            vmt_weight=("vmt_weight", "sum"),
            quantity=("quantity", "sum"),
            expenditure=("expenditure", "sum"),
            total_expenditure=("total_expenditure", "first"),
            share=("share", "sum"),
        )
        grouped = grouped.reset_index()
        population = grouped["vehicle_population"].where(grouped["vehicle_population"] > 0)
        grouped["vmt"] = (grouped["vmt_weight"] / population).fillna(0.0)
        grouped = grouped.drop(columns="vmt_weight")
        fuels = {}
        for i, group in enumerate(groups):
            group_fuels = {self.fuels.get(m) for m in group}
            if len(group_fuels) == 1 and None not in group_fuels:
                fuels[labels[i]] = group_fuels.pop()
        logger.info("grouped %d classes into %d price groups", len(self.classes), len(groups))
        return FuelPanel.from_frame(grouped[PANEL_COLUMNS + DERIVED_COLUMNS], fuels=fuels)


def _price_group_labels(groups: list[list[str]], fuels: dict[str, Fuel]) -> list[str]:
    labels = []
    for group in groups:
        group_fuels = {fuels.get(m) for m in group}
        if len(group) > 1 and len(group_fuels) == 1 and None not in group_fuels:
            labels.append(group_fuels.pop().value)
        else:
            labels.append("+".join(group))
    if len(set(labels)) != len(labels):
        labels = ["+".join(group) for group in groups]
    return labels


def load_panel(path: str | Path, schema: PanelSchema = DEFAULT_SCHEMA) -> FuelPanel:
    path = Path(path)
    if not path.is_file():
        raise PanelValidationError(f"panel file not found: {path}")
    frame = pd.read_csv(path, sep=schema.delimiter, dtype=str, keep_default_na=False)
    frame.columns = [c.strip() for c in frame.columns]
    for column in schema.columns:
        if column not in frame.columns:
            raise PanelValidationError("missing column", row=1, column=column)

    records = []
    seen: dict[tuple[str, int, str], int] = {}
    for position, raw in enumerate(frame[list(schema.columns)].to_dict(orient="records")):
        line = position + 2
        try:
            row = PanelObservation.model_validate(raw)
        except ValidationError as exc:
            raise _row_error(exc, line) from None
        key = (row.province, row.year, row.vehicle_class)
        if key in seen:
            raise PanelValidationError(
                f"duplicate (province, year, class) key {key}, first seen on line {seen[key]}",
                row=line,
                column="class",
            )
        seen[key] = line
        records.append(row.model_dump(by_alias=True, include=_RAW_FIELDS))

    if not records:
        raise PanelValidationError("panel file has no data rows", row=2)
    result = pd.DataFrame.from_records(records)[PANEL_COLUMNS]
    logger.info("loaded panel %s: %d rows", path, len(result))
    return FuelPanel.from_frame(result)


def _row_error(exc: ValidationError, line: int) -> PanelValidationError:
    error = exc.errors()[0]
    column = str(error["loc"][0]) if error["loc"] else None
    if column == "vehicle_class":
        column = "class"
    kind = error["type"]
    if kind.endswith("_parsing") or kind.endswith("_type"):
        detail = f"non-numeric cell {error.get('input')!r}"
    elif column == "price":
        detail = f"non-positive price {error.get('input')!r}"
    else:
        detail = error["msg"]
    return PanelValidationError(detail, row=line, column=column)


def write_panel(panel: FuelPanel, path: str | Path) -> Path:
    path = Path(path)
    panel.frame[PANEL_COLUMNS].to_csv(path, index=False)
    return path


def derive_activity(panel: FuelPanel, fleet: FleetParams) -> FuelPanel:
    missing = [c for c in panel.classes if fleet.get(c) is None]
    if missing:
        raise InvalidArgumentError(f"no fleet parameters for class(es): {', '.join(missing)}")

    frame = panel.frame[PANEL_COLUMNS].copy()
    economy = frame["class"].map({c.id: c.fuel_economy for c in fleet.classes})
    frame["quantity"] = frame["vehicle_population"] * frame["vmt"] * economy / 100.0
    frame["expenditure"] = frame["quantity"] * frame["price"]
    frame["total_expenditure"] = frame.groupby(GROUP_KEYS)["expenditure"].transform("sum")
    if not (frame["total_expenditure"] > 0).all():
        bad = frame.loc[~(frame["total_expenditure"] > 0), GROUP_KEYS].iloc[0].tolist()
        raise InvalidArgumentError(f"group {tuple(bad)} has zero total fuel expenditure")
    frame["share"] = frame["expenditure"] / frame["total_expenditure"]

    drift = (frame.groupby(GROUP_KEYS)["share"].sum() - 1.0).abs().max()
    if drift >= SHARE_TOLERANCE:
        raise InputValidationError(f"expenditure shares do not add up (max drift {drift:.3e})")
    fuels = {c: fleet.get(c).fuel for c in panel.classes}
    return FuelPanel(frame=frame, classes=panel.classes, fuels=fuels)


def derive_vmt(baseline_vmt: float, provincial_distance_index: float, national_distance_index: float) -> float:
    """Scale national baseline VMT by the provincial-to-national transport distance ratio."""
    if not (provincial_distance_index > 0 and national_distance_index > 0):
        raise InvalidArgumentError("distance indices must be positive")
    return baseline_vmt * provincial_distance_index / national_distance_index


def pm10_to_pm25(pm10_emissions: float, factor: float = 0.65) -> float:
    if not 0 < factor <= 1:
        raise InvalidArgumentError(f"PM10 to PM2.5 conversion factor must be in (0, 1], got {factor}")
    if pm10_emissions < 0:
        raise InvalidArgumentError("emissions must be non-negative")
    return pm10_emissions * factor
