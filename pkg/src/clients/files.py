"""File-system clients: the parameter directory and staged output writing."""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import TypeVar

import pandas as pd
from pydantic import BaseModel, ValidationError

from src.config import settings
from src.errors import InputValidationError, ParameterFileError
from src.models.emissions import EmissionElasticityTable, load_emission_elasticities
from src.models.panel import pm10_to_pm25
from src.schemas import ParameterSet, ScenarioConfig

logger = logging.getLogger(__name__)

PARAMETER_FILE = "params.json"
SCENARIO_FILE = "scenarios.json"
EMISSION_ELASTICITY_FILE = "emission_elasticities.csv"
PUBLISHED_FILE = "published_scenarios.csv"

REPO_ROOT = Path(__file__).resolve().parents[2]

Document = TypeVar("Document", bound=BaseModel)


def _validation_message(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error["loc"])
    return f"{location}: {error['msg']}" if location else error["msg"]


def read_json(path: str | Path) -> object:
    path = Path(path)
    if not path.is_file():
        raise ParameterFileError("file not found", path=str(path))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParameterFileError(f"invalid JSON: {exc.msg}", path=str(path), line=exc.lineno) from None


def read_document(path: str | Path, model: type[Document]) -> Document:
    """Load a JSON document and validate it against ``model``."""
    raw = read_json(path)
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise ParameterFileError(_validation_message(exc), path=str(path)) from None


def _convert_pm10(record: dict) -> dict:
    if "pm10_emissions" not in record or "baseline_emissions" in record:
        return record
    record = dict(record)
    factor = record.pop("pm25_conversion_factor", settings.pm25_conversion_factor)
    pm10 = record.pop("pm10_emissions")
    record["baseline_emissions"] = pm10_to_pm25(float(pm10), float(factor))
    sources = dict(record.get("sources", {}))
    origin = sources.pop("pm10_emissions", "PM10 emissions")
    sources.setdefault("baseline_emissions", f"{origin}; PM10 x {factor}")
    sources.pop("pm25_conversion_factor", None)
    record["sources"] = sources
    return record


class ParameterClient:
    """Reads the versioned parameter directory (parameters, scenarios, reference tables)."""

    def __init__(self, base_dir: str | Path | None = None):
        base = Path(base_dir or settings.parameter_dir)
        if not base.is_absolute() and not base.exists() and (REPO_ROOT / base).exists():
            base = REPO_ROOT / base
        self.base_dir = base

    def path(self, name: str) -> Path:
        return self.base_dir / name

    def load_parameters(self, path: str | Path | None = None) -> ParameterSet:
        path = Path(path) if path else self.path(PARAMETER_FILE)
        raw = read_json(path)
        if isinstance(raw, dict) and isinstance(raw.get("pollutants"), list):
            raw = {**raw, "pollutants": [_convert_pm10(p) if isinstance(p, dict) else p for p in raw["pollutants"]]}
        try:
            params = ParameterSet.model_validate(raw)
        except ValidationError as exc:
            raise ParameterFileError(_validation_message(exc), path=str(path)) from None
        logger.info("loaded parameter set %s from %s", params.version, path)
        return params

    def load_scenarios(self, path: str | Path | None = None) -> ScenarioConfig:
        path = Path(path) if path else self.path(SCENARIO_FILE)
        return read_document(path, ScenarioConfig)

    def load_emission_elasticities(self, path: str | Path | None = None) -> EmissionElasticityTable:
        return load_emission_elasticities(Path(path) if path else self.path(EMISSION_ELASTICITY_FILE))

    def load_published(self, path: str | Path | None = None) -> pd.DataFrame:
        path = Path(path) if path else self.path(PUBLISHED_FILE)
        if not path.is_file():
            raise InputValidationError(f"published values file not found: {path}")
        frame = pd.read_csv(path, dtype={"scenario": str, "pollutant": str, "metric": str})
        missing = {"scenario", "pollutant", "metric", "value"} - set(frame.columns)
        if missing:
            raise InputValidationError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        return frame


class OutputWriter:
    """Stages every output in a temporary directory and moves them into place on commit.

    Used as a context manager: if the block raises, nothing in ``target`` changes.
    """

    def __init__(self, target: str | Path, precision: int | None = None):
        self.target = Path(target)
        self.precision = settings.float_precision if precision is None else precision
        self._staging: Path | None = None
        self._names: list[str] = []

    def __enter__(self) -> "OutputWriter":
        self.target.mkdir(parents=True, exist_ok=True)
        self._staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.target))
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        try:
            if exc_type is None:
                self._commit()
        finally:
            shutil.rmtree(self._staging, ignore_errors=True)
            self._staging = None

    def _stage(self, name: str) -> Path:
        if self._staging is None:
            raise RuntimeError("OutputWriter used outside its context")
        self._names.append(name)
        return self._staging / name

    def write_document(self, name: str, document: BaseModel) -> None:
        self._stage(name).write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")

    def write_table(self, name: str, frame: pd.DataFrame, round_values: bool = True) -> None:
        if round_values and self.precision is not None:
            frame = frame.round(self.precision)
        frame.to_csv(self._stage(name), index=False, lineterminator="\n")

    def write_text(self, name: str, text: str) -> None:
        self._stage(name).write_text(text, encoding="utf-8")

    def _commit(self) -> None:
        """Move staged files into ``target``; any failure restores what was there before."""
        names = list(dict.fromkeys(self._names))
        previous = self._staging / ".previous"
        previous.mkdir()
        saved: list[str] = []
        placed: list[str] = []
        try:
            for name in names:
                if (self.target / name).exists():
                    os.replace(self.target / name, previous / name)
                    saved.append(name)
                os.replace(self._staging / name, self.target / name)
                placed.append(name)
        except OSError:
            logger.error("could not move outputs into %s; restoring the previous files", self.target)
            for name in placed:
                (self.target / name).unlink(missing_ok=True)
            for name in saved:
                os.replace(previous / name, self.target / name)
            raise
        logger.info("wrote %s to %s", ", ".join(names), self.target)

    @property
    def written(self) -> list[Path]:
        return [self.target / name for name in dict.fromkeys(self._names)]
