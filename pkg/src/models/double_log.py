"""Double-log fuel demand regressions, one per vehicle class.

ln q_i = c_i + e_ii ln p_i + e_i ln X, so the slope coefficients are direct
own-price and expenditure elasticity estimates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import statsmodels.api as sm

from src.errors import DegenerateRegressorError, InsufficientDataError, InvalidArgumentError
from src.models.panel import FuelPanel
from src.schemas import DoubleLogDocument, DoubleLogRow

logger = logging.getLogger(__name__)

MIN_OBSERVATIONS = 3


@dataclass(frozen=True)
class DoubleLogCoefficients:
    intercept: float
    own_price_coefficient: float
    expenditure_coefficient: float
    intercept_se: float
    own_price_se: float
    expenditure_se: float
    n_obs: int


@dataclass(frozen=True)
class DoubleLogFit:
    classes: tuple[str, ...]
    coefficients: dict[str, DoubleLogCoefficients]

    def __getitem__(self, vehicle_class: str) -> DoubleLogCoefficients:
        return self.coefficients[vehicle_class]

    def to_document(self) -> DoubleLogDocument:
        return DoubleLogDocument(
            rows=[
                DoubleLogRow(
                    vehicle_class=c,
                    intercept=self[c].intercept,
                    own_price_coefficient=self[c].own_price_coefficient,
                    expenditure_coefficient=self[c].expenditure_coefficient,
                    intercept_se=self[c].intercept_se,
                    own_price_se=self[c].own_price_se,
                    expenditure_se=self[c].expenditure_se,
                    observations=self[c].n_obs,
                )
                for c in self.classes
            ]
        )


def fit_double_log(panel: FuelPanel) -> DoubleLogFit:
    if not panel.is_derived:
        raise InvalidArgumentError("double-log fit needs derived quantities; run derive_activity first")
    frame = panel.frame
    coefficients = {}
    for vehicle_class in panel.classes:
        rows = frame[frame["class"] == vehicle_class]
        if len(rows) < MIN_OBSERVATIONS:
            raise InsufficientDataError(
                f"class {vehicle_class} has {len(rows)} observations; at least {MIN_OBSERVATIONS} needed"
            )
        for column in ("quantity", "price", "total_expenditure"):
            if not (rows[column] > 0).all():
                raise InvalidArgumentError(f"class {vehicle_class}: {column} must be positive for a log model")

        log_q = np.log(rows["quantity"].to_numpy(dtype=float))
        regressors = {
            "price": np.log(rows["price"].to_numpy(dtype=float)),
            "expenditure": np.log(rows["total_expenditure"].to_numpy(dtype=float)),
        }
        for name, values in regressors.items():
            if np.ptp(values) == 0:
                raise DegenerateRegressorError(f"class {vehicle_class}: ln {name} has zero variance")

        exog = sm.add_constant(np.column_stack([regressors["price"], regressors["expenditure"]]), has_constant="add")
        # HC1 rescales by n / (n - k), undefined with no residual degrees of freedom
        cov_type = "HC1" if len(rows) > exog.shape[1] else "HC0"
        result = sm.OLS(log_q, exog).fit(cov_type=cov_type)
        se = np.sqrt(np.clip(np.diag(np.asarray(result.cov_params())), 0.0, None))
        params = np.asarray(result.params)
        coefficients[vehicle_class] = DoubleLogCoefficients(
            intercept=float(params[0]),
            own_price_coefficient=float(params[1]),
            expenditure_coefficient=float(params[2]),
            intercept_se=float(se[0]),
            own_price_se=float(se[1]),
            expenditure_se=float(se[2]),
            n_obs=len(rows),
        )
        logger.debug(
            "double-log %s: price %.4f (%.4f), expenditure %.4f (%.4f)",
            vehicle_class, params[1], se[1], params[2], se[2],
        )
    return DoubleLogFit(classes=panel.classes, coefficients=coefficients)
