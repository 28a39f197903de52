"""Marshallian price and expenditure elasticities of an AIDS fit.

    e_ij = -delta_ij + (gamma_ij - beta_i (alpha_j + sum_m gamma_jm ln p_m)) / w_i
    e_i  = 1 + beta_i / w_i

Standard errors come from the delta method over the free parameters of the fit; a
group bootstrap is available as a cross-check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import pandas as pd

from src.config import settings
from src.errors import EstimationError, InvalidArgumentError
from src.models.aids import AidsFit, AidsParameters, fit_share_system
from src.models.panel import FuelPanel
from src.schemas import ElasticityDocument, EstimatorOptions, EvaluationPoint

logger = logging.getLogger(__name__)

SHARE_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class EvaluationAt:
    shares: np.ndarray
    log_prices: np.ndarray


Target = Callable[[AidsParameters, Optional[EvaluationAt]], np.ndarray]


def _positive_shares(shares: np.ndarray) -> np.ndarray:
    shares = np.asarray(shares, dtype=float)
    if np.any(shares == 0):
        zero = int(np.flatnonzero(shares == 0)[0])
        raise InvalidArgumentError(f"share of good {zero} is zero; elasticities are undefined")
    if np.any(shares < 0):
        raise InvalidArgumentError("shares must be strictly positive")
    return shares


def price_elasticities(params: AidsParameters, shares: np.ndarray, log_prices: np.ndarray) -> np.ndarray:
    """N x N Marshallian price elasticities; row i is the good, column j the price."""
    shares = _positive_shares(shares)
    log_prices = np.asarray(log_prices, dtype=float)
    n = params.n_goods
    if shares.shape != (n,) or log_prices.shape != (n,):
        raise InvalidArgumentError(f"expected {n} shares and log-prices, got {shares.shape} and {log_prices.shape}")
    bracket = params.alpha + params.gamma @ log_prices
    return -np.eye(n) + (params.gamma - np.outer(params.beta, bracket)) / shares[:, None]


def expenditure_elasticities(params: AidsParameters, shares: np.ndarray) -> np.ndarray:
    shares = _positive_shares(shares)
    if shares.shape != (params.n_goods,):
        raise InvalidArgumentError(f"expected {params.n_goods} shares, got {shares.shape}")
    return 1.0 + params.beta / shares


def delta_method_se(
    fit: AidsFit,
    target: Target,
    point: EvaluationAt | None = None,
    step: float | None = None,
) -> np.ndarray:
    """First-order standard errors of ``target(params, point)``.

    The Jacobian is taken by central differences in the free parameters with step
    ``step * max(1, |phi_k|)``; the result has the shape of the target.
    """
    covariance = fit.covariance
    k = len(fit.free_params)
    if covariance is None or np.shape(covariance) != (k, k):
        raise EstimationError("fit carries no free-parameter covariance; cannot apply the delta method")
    step = settings.jacobian_step if step is None else step

    base = np.asarray(target(fit.params, point), dtype=float)
    jacobian = np.empty((base.size, k))
    for col, value in enumerate(fit.free_params):
        h = step * max(1.0, abs(value))
        up = fit.free_params.copy()
        down = fit.free_params.copy()
        up[col] += h
        down[col] -= h
        f_up = np.asarray(target(fit.restriction.expand(up, fit.params.alpha0), point), dtype=float).ravel()
        f_down = np.asarray(target(fit.restriction.expand(down, fit.params.alpha0), point), dtype=float).ravel()
        jacobian[:, col] = (f_up - f_down) / (2.0 * h)
    if not np.all(np.isfinite(jacobian)):
        raise EstimationError("non-finite Jacobian in delta-method standard errors")

    variance = np.einsum("ak,kl,al->a", jacobian, covariance, jacobian)
    return np.sqrt(np.clip(variance, 0.0, None)).reshape(base.shape)


@dataclass(frozen=True)
class ElasticityTable:
    classes: tuple[str, ...]
    price: np.ndarray
    expenditure: np.ndarray
    price_se: np.ndarray
    expenditure_se: np.ndarray
    evaluation_shares: np.ndarray
    evaluation_log_prices: np.ndarray

    @property
    def own_price(self) -> pd.Series:
        return pd.Series(np.diag(self.price), index=list(self.classes), name="own_price")

    def to_document(self) -> ElasticityDocument:
        return ElasticityDocument(
            classes=list(self.classes),
            price=self.price.tolist(),
            expenditure=self.expenditure.tolist(),
            price_se=self.price_se.tolist(),
            expenditure_se=self.expenditure_se.tolist(),
            evaluation_shares=self.evaluation_shares.tolist(),
            evaluation_log_prices=self.evaluation_log_prices.tolist(),
        )

    @classmethod
    def from_document(cls, doc: ElasticityDocument) -> "ElasticityTable":
        return cls(
            classes=tuple(doc.classes),
            price=np.asarray(doc.price, dtype=float),
            expenditure=np.asarray(doc.expenditure, dtype=float),
            price_se=np.asarray(doc.price_se, dtype=float),
            expenditure_se=np.asarray(doc.expenditure_se, dtype=float),
            evaluation_shares=np.asarray(doc.evaluation_shares, dtype=float),
            evaluation_log_prices=np.asarray(doc.evaluation_log_prices, dtype=float),
        )

    def to_frame(self) -> pd.DataFrame:
        """Long table: one row per good with its price-elasticity row and expenditure elasticity."""
        labels = list(self.classes)
        frame = pd.DataFrame(self.price, index=labels, columns=labels)
        frame.insert(0, "expenditure", self.expenditure)
        frame.insert(1, "expenditure_se", self.expenditure_se)
        se = pd.DataFrame(self.price_se, index=labels, columns=[f"se_{c}" for c in labels])
        frame = pd.concat([frame, se], axis=1)
        frame.index.name = "class"
        return frame.reset_index()


def evaluation_point(fit: AidsFit, at: EvaluationPoint | None = None) -> EvaluationAt:
    """Sample means of the fit, or the shares and log-prices named in ``at``."""
    if at is None:
        shares, log_prices = fit.sample_means
    else:
        missing = [c for c in fit.classes if c not in at.shares or c not in at.log_prices]
        if missing:
            raise InvalidArgumentError(f"evaluation point lacks values for class(es): {', '.join(missing)}")
        shares = np.array([at.shares[c] for c in fit.classes], dtype=float)
        log_prices = np.array([at.log_prices[c] for c in fit.classes], dtype=float)
    if not np.all((shares > 0) & (shares < 1)):
        raise InvalidArgumentError("evaluation shares must lie strictly between 0 and 1")
    if abs(shares.sum() - 1.0) > SHARE_SUM_TOLERANCE:
        raise InvalidArgumentError(f"evaluation shares sum to {shares.sum():.8f}, not 1")
    return EvaluationAt(shares=np.asarray(shares, dtype=float), log_prices=np.asarray(log_prices, dtype=float))


def _price_target(params: AidsParameters, point: EvaluationAt | None) -> np.ndarray:
    return price_elasticities(params, point.shares, point.log_prices)


def _expenditure_target(params: AidsParameters, point: EvaluationAt | None) -> np.ndarray:
    return expenditure_elasticities(params, point.shares)


def elasticity_table(fit: AidsFit, at: EvaluationPoint | None = None) -> ElasticityTable:
    point = evaluation_point(fit, at)
    price = _price_target(fit.params, point)
    expenditure = _expenditure_target(fit.params, point)
    table = ElasticityTable(
        classes=fit.classes,
        price=price,
        expenditure=expenditure,
        price_se=delta_method_se(fit, _price_target, point),
        expenditure_se=delta_method_se(fit, _expenditure_target, point),
        evaluation_shares=point.shares,
        evaluation_log_prices=point.log_prices,
    )
    if not (np.all(np.isfinite(table.price)) and np.all(np.isfinite(table.expenditure))):
        raise EstimationError("elasticities are not finite at the evaluation point")
    logger.info("elasticities for %d classes at %s", len(fit.classes), "sample means" if at is None else "supplied point")
    return table


def bootstrap_elasticities(
    panel: FuelPanel,
    options: EstimatorOptions | None = None,
    replications: int = 500,
    seed: int = 0,
    at: EvaluationPoint | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Bootstrap standard errors of price and expenditure elasticities.

    Resamples (province, year) groups with replacement, refits and evaluates every
    replicate at the same point as the original fit (sample means unless ``at``).
    """
    if replications < 2:
        raise InvalidArgumentError("bootstrap needs at least two replications")
    if options is not None and options.group_prices:
        panel = panel.group_by_price()
        options = options.model_copy(update={"group_prices": False})
    log_prices = panel.log_prices()
    shares = panel.shares()
    log_x = panel.log_expenditure()
    base = fit_share_system(log_prices, shares, log_x, panel.classes, options)
    point = evaluation_point(base, at)

    rng = np.random.default_rng(seed)
    n_obs = len(log_x)
    price_draws = np.empty((replications, len(panel.classes), len(panel.classes)))
    expenditure_draws = np.empty((replications, len(panel.classes)))
    for r in range(replications):
        rows = rng.integers(0, n_obs, n_obs)
        fit = fit_share_system(log_prices[rows], shares[rows], log_x[rows], panel.classes, options)
        price_draws[r] = _price_target(fit.params, point)
        expenditure_draws[r] = _expenditure_target(fit.params, point)
    logger.info("bootstrap finished: %d replications", replications)
    return price_draws.std(axis=0, ddof=1), expenditure_draws.std(axis=0, ddof=1)
