"""Synthetic panels whose shares follow a known restricted AIDS."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.errors import InvalidArgumentError
from src.models.aids import AidsParameters, translog_price_index
from src.models.panel import PANEL_COLUMNS, FuelPanel, derive_activity, derive_vmt
from src.schemas import FleetClassParams, FleetParams, Fuel, Pollutant

logger = logging.getLogger(__name__)


def random_parameters(
    n_goods: int,
    rng: np.random.Generator,
    gamma_scale: float = 0.01,
    beta_scale: float = 0.01,
    concentration: float = 20.0,
    alpha0: float = 0.0,
) -> AidsParameters:
    """Random parameters satisfying adding-up, homogeneity and symmetry exactly."""
    if n_goods < 2:
        raise InvalidArgumentError("need at least two goods")
    alpha = rng.dirichlet(np.full(n_goods, concentration))
    beta = rng.normal(0.0, beta_scale, n_goods)
    beta -= beta.mean()
    raw = rng.normal(0.0, gamma_scale, (n_goods, n_goods))
    gamma = raw + raw.T
    # double centering keeps symmetry and zeroes every row and column sum
    gamma = gamma - gamma.mean(axis=0) - gamma.mean(axis=1)[:, None] + gamma.mean()
    return AidsParameters(alpha=alpha, beta=beta, gamma=gamma, alpha0=alpha0)


def share_noise(rng: np.random.Generator, shape: tuple[int, int], sigma: float) -> np.ndarray:
    """Normal noise with every row summing to zero."""
    noise = rng.normal(0.0, sigma, shape)
    return noise - noise.mean(axis=1, keepdims=True)


def simulate_shares(
    params: AidsParameters,
    n_obs: int,
    rng: np.random.Generator,
    noise: float = 0.005,
    price_spread: float = 0.2,
    expenditure_spread: float = 0.3,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (log-prices, shares, ln X) for ``n_obs`` observations with distinct prices per good."""
    log_prices = rng.normal(0.0, price_spread, (n_obs, params.n_goods))
    log_x = translog_price_index(log_prices, params) + rng.normal(0.0, expenditure_spread, n_obs)
    shares = params.shares(log_prices, log_x - translog_price_index(log_prices, params))
    shares = shares + share_noise(rng, shares.shape, noise)
    if np.any(shares <= 0):
        raise InvalidArgumentError("simulated shares left (0, 1); lower the parameter scales or spreads")
    return log_prices, shares, log_x


def synthetic_fleet(n_classes: int, rng: np.random.Generator) -> FleetParams:
    classes = []
    for i in range(n_classes):
        fuel = Fuel.GASOLINE if i % 2 else Fuel.DIESEL
        classes.append(
            FleetClassParams(
                id=f"C{i + 1}-{'G' if fuel == Fuel.GASOLINE else 'D'}",
                fuel=fuel,
                baseline_vmt=float(rng.uniform(15_000, 75_000)),
                fuel_economy=float(rng.uniform(6, 33)),
                emission_factors={p: float(rng.uniform(0.05, 10)) for p in Pollutant},
                sources={k: "synthetic" for k in ("baseline_vmt", "fuel_economy", "emission_factors")},
            )
        )
    return FleetParams(classes=classes)


@dataclass(frozen=True)
class SimulatedPanel:
    panel: FuelPanel
    params: AidsParameters
    fleet: FleetParams


def simulate_panel(
    fleet: FleetParams | None = None,
    n_classes: int = 10,
    provinces: int = 31,
    years: int = 10,
    start_year: int = 2002,
    seed: int = 0,
    noise: float = 0.005,
    params: AidsParameters | None = None,
    expenditure_scale: float = 1e9,
) -> SimulatedPanel:
    """A derived province x year x class panel generated from a restricted AIDS.

    Prices differ by class, province and year; the share noise preserves adding-up.
    Vehicle populations are backed out from expenditure through the fleet's VMT and fuel
    economy, so ``derive_activity`` on the raw columns recovers the simulated shares.

    ``alpha0`` stays at 0, as in estimation. Group spending is centred on
    ``expenditure_scale`` currency units; when parameters are drawn here, their intercepts
    are shifted by ``-beta * ln(expenditure_scale)`` so shares at that spending level
    follow the drawn ones. Supplied parameters are used as given, with spending centred
    on their price index.
    """
    rng = np.random.default_rng(seed)
    fleet = fleet or synthetic_fleet(n_classes, rng)
    classes = fleet.class_ids
    n = len(classes)
    if params is None:
        if expenditure_scale <= 0:
            raise InvalidArgumentError("expenditure scale must be positive")
        log_level = math.log(expenditure_scale)
        drawn = random_parameters(n, rng)
        params = AidsParameters(alpha=drawn.alpha - drawn.beta * log_level, beta=drawn.beta, gamma=drawn.gamma)
    elif params.n_goods != n:
        raise InvalidArgumentError(f"parameters cover {params.n_goods} goods, fleet has {n} classes")
    else:
        log_level = 0.0

    province_effect = rng.normal(0.0, 0.1, provinces)
    class_effect = rng.normal(0.0, 0.1, n)
    distance_index = rng.uniform(0.8, 1.2, provinces)
    records = []
    for p in range(provinces):
        for t in range(years):
            log_prices = (
                math.log(6.0) + province_effect[p] + 0.04 * t + class_effect + rng.normal(0.0, 0.05, n)
            )
            log_p_index = translog_price_index(log_prices, params)
            log_x = log_p_index + log_level + rng.normal(0.0, 0.3)
            shares = params.shares(log_prices, np.array([log_x - log_p_index]))[0]
            shares = shares + share_noise(rng, (1, n), noise)[0]
            if np.any(shares <= 0):
                raise InvalidArgumentError("simulated shares left (0, 1); lower the noise")
            total = math.exp(log_x)
            for i, vehicle in enumerate(fleet.classes):
                price = math.exp(log_prices[i])
                vmt = derive_vmt(vehicle.baseline_vmt, distance_index[p], 1.0)
                litres = shares[i] * total / price
                records.append(
                    {
                        "province": f"P{p + 1:02d}",
                        "year": start_year + t,
                        "class": vehicle.id,
                        "price": price,
                        "vehicle_population": litres * 100.0 / (vmt * vehicle.fuel_economy),
                        "vmt": vmt,
                    }
                )
    raw = FuelPanel.from_frame(pd.DataFrame.from_records(records, columns=PANEL_COLUMNS))
    panel = derive_activity(raw, fleet)
    logger.info("simulated panel: %d provinces x %d years x %d classes", provinces, years, n)
    return SimulatedPanel(panel=panel, params=params, fleet=fleet)
