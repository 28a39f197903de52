"""Tests for demand elasticities and their standard errors."""

import dataclasses

import numpy as np
import pytest

from src.errors import EstimationError, InvalidArgumentError
from src.models.aids import AidsParameters, fit_aids, fit_share_system, translog_price_index
from src.models.elasticity import (
    bootstrap_elasticities,
    delta_method_se,
    elasticity_table,
    expenditure_elasticities,
    price_elasticities,
)
from src.models.synthetic import random_parameters, simulate_panel
from src.schemas import EvaluationPoint


@pytest.fixture
def params():
    return random_parameters(5, np.random.default_rng(3))


@pytest.fixture
def point():
    rng = np.random.default_rng(4)
    return rng.dirichlet(np.full(5, 5.0)), rng.normal(0.0, 0.2, 5)


@pytest.fixture
def fitted(small_system):
    _, log_prices, shares, log_x, classes = small_system
    return fit_share_system(log_prices, shares, log_x, classes)


def numeric_elasticities(params, log_prices, log_x, h=1e-6):
    """Central differences of log demand, ln q_i = ln w_i + ln x - ln p_i."""

    def log_demand(lp, lx):
        w = params.shares(lp, np.array([lx - translog_price_index(lp, params)]))[0]
        return np.log(w) + lx - lp

    n = len(log_prices)
    price = np.empty((n, n))
    for j in range(n):
        up, down = log_prices.copy(), log_prices.copy()
        up[j] += h
        down[j] -= h
        price[:, j] = (log_demand(up, log_x) - log_demand(down, log_x)) / (2 * h)
    expenditure = (log_demand(log_prices, log_x + h) - log_demand(log_prices, log_x - h)) / (2 * h)
    shares = params.shares(log_prices, np.array([log_x - translog_price_index(log_prices, params)]))[0]
    return shares, price, expenditure


class TestAggregationConditions:
    def test_homogeneity(self, params, point):
        shares, log_prices = point
        e = price_elasticities(params, shares, log_prices)
        eta = expenditure_elasticities(params, shares)
        assert np.allclose(e.sum(axis=1) + eta, 0.0, atol=1e-12)

    def test_engel_aggregation(self, params, point):
        shares, _ = point
        assert shares @ expenditure_elasticities(params, shares) == pytest.approx(1.0, abs=1e-12)

    def test_cournot_aggregation(self, params, point):
        shares, log_prices = point
        e = price_elasticities(params, shares, log_prices)
        assert np.allclose(shares @ e, -shares, atol=1e-12)


class TestFormulas:
    def test_matches_numerical_derivative_of_demand(self, params):
        log_prices = np.array([0.1, -0.05, 0.2, 0.0, -0.1])
        shares, numeric, numeric_expenditure = numeric_elasticities(params, log_prices, 0.3)
        assert np.allclose(price_elasticities(params, shares, log_prices), numeric, atol=1e-6)
        assert np.allclose(expenditure_elasticities(params, shares), numeric_expenditure, atol=1e-6)

    def test_random_draws_match_numerical_derivative(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            params = random_parameters(4, rng, alpha0=rng.normal())
            log_prices = rng.normal(0.0, 0.3, 4)
            shares, numeric, numeric_expenditure = numeric_elasticities(params, log_prices, rng.normal(0.0, 0.5))
            assert np.allclose(price_elasticities(params, shares, log_prices), numeric, atol=1e-5)
            assert np.allclose(expenditure_elasticities(params, shares), numeric_expenditure, atol=1e-5)

    def test_no_price_or_income_effects(self):
        params = AidsParameters(alpha=np.full(3, 1 / 3), beta=np.zeros(3), gamma=np.zeros((3, 3)))
        shares = np.full(3, 1 / 3)
        assert np.allclose(price_elasticities(params, shares, np.zeros(3)), -np.eye(3))
        assert np.allclose(expenditure_elasticities(params, shares), 1.0)

    def test_necessity_good(self):
        params = AidsParameters(
            alpha=np.array([0.1, 0.9]), beta=np.array([-0.05, 0.05]), gamma=np.zeros((2, 2))
        )
        assert expenditure_elasticities(params, np.array([0.1, 0.9]))[0] == pytest.approx(0.5)

    def test_zero_share(self, params):
        shares = np.array([0.0, 0.25, 0.25, 0.25, 0.25])
        with pytest.raises(InvalidArgumentError, match="zero"):
            expenditure_elasticities(params, shares)


class TestDeltaMethod:
    def test_linear_target_matches_covariance(self, fitted):
        n = len(fitted.classes)
        se = delta_method_se(fitted, lambda p, _: p.beta)
        expected = np.sqrt(np.diag(fitted.full_covariance)[n : 2 * n])
        assert np.allclose(se, expected, rtol=1e-5)

    def test_zero_covariance_gives_zero_errors(self, fitted):
        silent = dataclasses.replace(fitted, covariance=np.zeros_like(fitted.covariance))
        table = elasticity_table(silent)
        assert np.all(table.price_se == 0)
        assert np.all(table.expenditure_se == 0)

    def test_missing_covariance(self, fitted):
        broken = dataclasses.replace(fitted, covariance=np.zeros((0, 0)))
        with pytest.raises(EstimationError):
            delta_method_se(broken, lambda p, _: p.beta)


class TestElasticityTable:
    def test_at_sample_means(self, fitted):
        table = elasticity_table(fitted)
        assert table.price.shape == (4, 4)
        assert np.allclose(table.evaluation_shares, fitted.mean_shares)
        assert np.all(table.price_se > 0)
        assert list(table.own_price.index) == ["A", "B", "C", "D"]
        frame = table.to_frame()
        assert list(frame.columns[:3]) == ["class", "expenditure", "expenditure_se"]
        assert "se_A" in frame.columns

    def test_at_supplied_point(self, fitted):
        at = EvaluationPoint(
            shares={"A": 0.4, "B": 0.3, "C": 0.2, "D": 0.1},
            log_prices={"A": 0.0, "B": 0.1, "C": -0.1, "D": 0.05},
        )
        table = elasticity_table(fitted, at)
        assert np.allclose(table.evaluation_shares, [0.4, 0.3, 0.2, 0.1])
        assert np.allclose(table.expenditure, 1.0 + fitted.params.beta / table.evaluation_shares)

    def test_point_must_add_up(self, fitted):
        at = EvaluationPoint(
            shares={"A": 0.4, "B": 0.3, "C": 0.2, "D": 0.2},
            log_prices={"A": 0.0, "B": 0.0, "C": 0.0, "D": 0.0},
        )
        with pytest.raises(InvalidArgumentError, match="sum"):
            elasticity_table(fitted, at)

    def test_point_must_name_every_class(self, fitted):
        at = EvaluationPoint(shares={"A": 1.0}, log_prices={"A": 0.0})
        with pytest.raises(InvalidArgumentError, match="B"):
            elasticity_table(fitted, at)


class TestBootstrap:
    def test_agrees_with_delta_method(self):
        params = random_parameters(3, np.random.default_rng(21))
        panel = simulate_panel(n_classes=3, provinces=40, years=10, seed=2, noise=0.002, params=params).panel
        table = elasticity_table(fit_aids(panel))
        price_se, expenditure_se = bootstrap_elasticities(panel, replications=500, seed=1)

        assert np.allclose(np.diag(price_se), np.diag(table.price_se), rtol=0.25)
        assert np.allclose(expenditure_se, table.expenditure_se, rtol=0.25)

    def test_needs_replications(self, derived_three_class_panel):
        with pytest.raises(InvalidArgumentError):
            bootstrap_elasticities(derived_three_class_panel, replications=1)
