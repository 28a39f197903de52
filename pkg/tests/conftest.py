"""Shared fixtures: the shipped reference data and small synthetic systems."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.clients.files import ParameterClient
from src.models.panel import FuelPanel, derive_activity
from src.models.synthetic import random_parameters, simulate_shares
from src.schemas import FleetClassParams, FleetParams, Fuel, Pollutant

REPO_ROOT = Path(__file__).resolve().parents[1]
REFERENCE_DIR = REPO_ROOT / "data" / "reference"
SAMPLE_PANEL = REPO_ROOT / "data" / "sample_panel.csv"


@pytest.fixture
def reference_client():
    return ParameterClient(REFERENCE_DIR)


@pytest.fixture
def reference_params(reference_client):
    return reference_client.load_parameters()


@pytest.fixture
def reference_table(reference_client):
    return reference_client.load_emission_elasticities()


@pytest.fixture
def reference_scenarios(reference_client):
    return reference_client.load_scenarios().scenarios


@pytest.fixture
def small_system():
    """Four goods, 2000 observations, shares from a known restricted AIDS."""
    rng = np.random.default_rng(7)
    params = random_parameters(4, rng)
    log_prices, shares, log_x = simulate_shares(params, 2000, rng, noise=0.001)
    return params, log_prices, shares, log_x, ["A", "B", "C", "D"]


def fleet_class(class_id: str, fuel: Fuel, vmt: float = 20_000.0, economy: float = 10.0) -> FleetClassParams:
    return FleetClassParams(
        id=class_id,
        fuel=fuel,
        baseline_vmt=vmt,
        fuel_economy=economy,
        emission_factors={Pollutant.CO: 2.0, Pollutant.NOX: 1.0, Pollutant.PM25: 0.1},
        sources={k: "test" for k in ("baseline_vmt", "fuel_economy", "emission_factors")},
    )


@pytest.fixture
def three_class_fleet():
    return FleetParams(
        classes=[
            fleet_class("G1", Fuel.GASOLINE, economy=8.0),
            fleet_class("G2", Fuel.GASOLINE, economy=12.0),
            fleet_class("D1", Fuel.DIESEL, vmt=50_000.0, economy=25.0),
        ]
    )


def make_panel(prices: dict[str, list[float]], populations: dict[str, list[float]], vmt: float = 20_000.0) -> FuelPanel:
    """Raw panel for one province with one year per price entry."""
    records = []
    for vehicle_class, series in prices.items():
        for t, price in enumerate(series):
            records.append(
                {
                    "province": "P01",
                    "year": 2002 + t,
                    "class": vehicle_class,
                    "price": price,
                    "vehicle_population": populations[vehicle_class][t],
                    "vmt": vmt,
                }
            )
    return FuelPanel.from_frame(pd.DataFrame.from_records(records))


@pytest.fixture
def derived_three_class_panel(three_class_fleet):
    prices = {"G1": [6.0, 6.5, 7.0, 7.2], "G2": [6.0, 6.5, 7.0, 7.2], "D1": [5.5, 5.8, 6.4, 6.3]}
    populations = {"G1": [100, 110, 120, 125], "G2": [50, 52, 55, 60], "D1": [30, 31, 29, 35]}
    return derive_activity(make_panel(prices, populations), three_class_fleet)
