"""Tests for the per-class double-log demand regressions."""

import numpy as np
import pandas as pd
import pytest

from src.errors import DegenerateRegressorError, InsufficientDataError, InvalidArgumentError
from src.models.double_log import fit_double_log
from src.models.panel import FuelPanel


def derived_panel(price_elasticity=-0.5, expenditure_elasticity=0.8, n_years=12, constant_price=False, noise=0.0):
    rng = np.random.default_rng(5)
    records = []
    for t in range(n_years):
        total = float(np.exp(rng.normal(10.0, 0.3)))
        for vehicle_class, intercept in (("A", 1.0), ("B", 0.5)):
            price = 6.0 if constant_price else float(np.exp(rng.normal(1.8, 0.1)))
            log_q = intercept + price_elasticity * np.log(price) + expenditure_elasticity * np.log(total)
            quantity = float(np.exp(log_q + rng.normal(0.0, noise)))
            records.append(
                {
                    "province": "P01",
                    "year": 2002 + t,
                    "class": vehicle_class,
                    "price": price,
                    "vehicle_population": 1.0,
                    "vmt": 1.0,
                    "quantity": quantity,
                    "expenditure": quantity * price,
                    "total_expenditure": total,
                    "share": 0.5,
                }
            )
    return FuelPanel.from_frame(pd.DataFrame.from_records(records))


class TestDoubleLog:
    def test_recovers_exact_elasticities(self):
        fit = fit_double_log(derived_panel())
        assert fit.classes == ("A", "B")
        assert fit["A"].own_price_coefficient == pytest.approx(-0.5, abs=1e-8)
        assert fit["A"].expenditure_coefficient == pytest.approx(0.8, abs=1e-8)
        assert fit["B"].intercept == pytest.approx(0.5, abs=1e-6)
        assert fit["A"].n_obs == 12

    def test_recovers_inelastic_necessity(self):
        fit = fit_double_log(derived_panel(-0.8, 0.5))
        assert fit["B"].own_price_coefficient == pytest.approx(-0.8, abs=1e-8)
        assert fit["B"].expenditure_coefficient == pytest.approx(0.5, abs=1e-8)

    def test_noisy_panel_within_four_standard_errors(self):
        fit = fit_double_log(derived_panel(n_years=200, noise=0.05))
        for vehicle_class in fit.classes:
            coefficients = fit[vehicle_class]
            assert abs(coefficients.own_price_coefficient + 0.5) < 4 * coefficients.own_price_se
            assert abs(coefficients.expenditure_coefficient - 0.8) < 4 * coefficients.expenditure_se

    def test_document_rows(self):
        doc = fit_double_log(derived_panel()).to_document()
        assert [row.vehicle_class for row in doc.rows] == ["A", "B"]
        assert all(row.own_price_se >= 0 for row in doc.rows)

    def test_constant_price(self):
        with pytest.raises(DegenerateRegressorError, match="ln price"):
            fit_double_log(derived_panel(constant_price=True))

    def test_too_few_observations(self):
        with pytest.raises(InsufficientDataError):
            fit_double_log(derived_panel(n_years=2))

    def test_needs_derived_panel(self):
        panel = derived_panel()
        raw = FuelPanel.from_frame(panel.frame.drop(columns=["quantity", "expenditure", "total_expenditure", "share"]))
        with pytest.raises(InvalidArgumentError):
            fit_double_log(raw)
