"""Restricted AIDS share system.

The N share equations are

    w_i = alpha_i + sum_j gamma_ij ln p_j + beta_i (ln X - ln P)

with ln P the translog index (or the Stone approximation). One equation is dropped (the
residual covariance of all N is singular) and its parameters are recovered through
adding-up. The remaining N-1 equations are estimated as a linearmodels SUR by iterated
FGLS, with homogeneity and symmetry added as linear constraints. The constrained
estimates are read back as a free-parameter vector ``phi`` that ``RestrictionMap`` maps
affinely onto the full parameter set. The translog index is handled by re-linearisation
until ``phi`` stops moving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from linearmodels.system import SUR

from src.config import settings
from src.errors import (
    ConvergenceError,
    EstimationError,
    InsufficientDataError,
    InvalidArgumentError,
    RankDeficiencyError,
)
from src.models.panel import FuelPanel
from src.schemas import EstimatorOptions, FitDocument, Fuel, PriceIndex

logger = logging.getLogger(__name__)

RESTRICTION_TOLERANCE = 1e-8


@dataclass(frozen=True)
class AidsParameters:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    alpha0: float = 0.0

    def __post_init__(self) -> None:
        n = len(self.alpha)
        if self.beta.shape != (n,) or self.gamma.shape != (n, n):
            raise InvalidArgumentError(
                f"parameter shapes disagree: alpha {self.alpha.shape}, beta {self.beta.shape}, "
                f"gamma {self.gamma.shape}"
            )

    @property
    def n_goods(self) -> int:
        return len(self.alpha)

    def restriction_residuals(self) -> dict[str, float]:
        return {
            "alpha_sum": float(abs(self.alpha.sum() - 1.0)),
            "beta_sum": float(abs(self.beta.sum())),
            "gamma_symmetry": float(np.abs(self.gamma - self.gamma.T).max()),
            "gamma_row_sums": float(np.abs(self.gamma.sum(axis=1)).max()),
            "gamma_column_sums": float(np.abs(self.gamma.sum(axis=0)).max()),
        }

    def satisfies_restrictions(self, tol: float = RESTRICTION_TOLERANCE) -> bool:
        return max(self.restriction_residuals().values()) < tol

    def shares(self, log_prices: np.ndarray, real_log_expenditure: np.ndarray) -> np.ndarray:
        """Shares at log-prices (n, N) and ln(X/P) (n,)."""
        log_prices = np.atleast_2d(log_prices)
        return self.alpha + log_prices @ self.gamma.T + np.outer(real_log_expenditure, self.beta)


def translog_price_index(log_prices: np.ndarray, params: AidsParameters) -> np.ndarray | float:
    """ln P = alpha0 + sum_j alpha_j ln p_j + 1/2 sum_i sum_j gamma_ij ln p_i ln p_j.

    Accepts one price vector (N,) or a matrix of observations (n, N).
    """
    log_prices = np.asarray(log_prices, dtype=float)
    if log_prices.shape[-1] != params.n_goods:
        raise InvalidArgumentError(
            f"expected {params.n_goods} log-prices per observation, got {log_prices.shape[-1]}"
        )
    quadratic = 0.5 * np.einsum("...i,ij,...j->...", log_prices, params.gamma, log_prices)
    value = params.alpha0 + log_prices @ params.alpha + quadratic
    return float(value) if np.ndim(value) == 0 else value


def stone_price_index(log_prices: np.ndarray, shares: np.ndarray) -> np.ndarray:
    return (np.asarray(shares) * np.asarray(log_prices)).sum(axis=-1)


class RestrictionMap:
    """Affine map from free parameters to (alpha, beta, gamma).

    Free parameters are alpha_k, beta_k and the upper triangle gamma_kl (k <= l) for
    every good k except the dropped one; the dropped good's parameters and the
    gamma entries in its row/column follow from adding-up and homogeneity.
    """

    def __init__(self, classes: list[str] | tuple[str, ...], dropped: int):
        self.classes = list(classes)
        n = len(self.classes)
        if n < 2:
            raise InvalidArgumentError("an AIDS system needs at least two goods")
        if not 0 <= dropped < n:
            raise InvalidArgumentError(f"dropped equation index {dropped} out of range")
        self.n_goods = n
        self.dropped = dropped
        self.kept = [i for i in range(n) if i != dropped]

        names: list[str] = []
        columns: list[np.ndarray] = []
        size = 2 * n + n * n
        d = dropped

        def gamma_at(i: int, j: int) -> int:
            return 2 * n + i * n + j

        for k in self.kept:
            col = np.zeros(size)
            col[k] = 1.0
            col[d] = -1.0
            columns.append(col)
            names.append(f"alpha[{self.classes[k]}]")
        for k in self.kept:
            col = np.zeros(size)
            col[n + k] = 1.0
            col[n + d] = -1.0
            columns.append(col)
            names.append(f"beta[{self.classes[k]}]")
        for a, k in enumerate(self.kept):
            for l in self.kept[a:]:
                col = np.zeros(size)
                for i, j in {(k, l), (l, k)}:
                    col[gamma_at(i, j)] += 1.0
                    # homogeneity of row i fixes gamma_id; symmetry mirrors it into gamma_di
                    col[gamma_at(i, d)] -= 1.0
                    col[gamma_at(d, i)] -= 1.0
                    col[gamma_at(d, d)] += 1.0
                columns.append(col)
                names.append(f"gamma[{self.classes[k]},{self.classes[l]}]")

        self.matrix = np.column_stack(columns)
        self.offset = np.zeros(size)
        self.offset[d] = 1.0
        self.names = names

    @property
    def n_free(self) -> int:
        return self.matrix.shape[1]

    def expand(self, free: np.ndarray, alpha0: float = 0.0) -> AidsParameters:
        n = self.n_goods
        full = self.matrix @ np.asarray(free, dtype=float) + self.offset
        return AidsParameters(
            alpha=full[:n], beta=full[n : 2 * n], gamma=full[2 * n :].reshape(n, n), alpha0=alpha0
        )

    def contract(self, params: AidsParameters) -> np.ndarray:
        """Free-parameter vector of a restricted parameter set."""
        values = []
        values.extend(params.alpha[k] for k in self.kept)
        values.extend(params.beta[k] for k in self.kept)
        for a, k in enumerate(self.kept):
            for l in self.kept[a:]:
                values.append(params.gamma[k, l])
        return np.asarray(values, dtype=float)

    def design(self, log_prices: np.ndarray, real_log_expenditure: np.ndarray) -> np.ndarray:
        """Regressors of the kept equations in the free basis, shape (N-1, n, K)."""
        n_obs = log_prices.shape[0]
        n = self.n_goods
        blocks = []
        for i in self.kept:
            full = np.zeros((n_obs, 2 * n + n * n))
            full[:, i] = 1.0
            full[:, n + i] = real_log_expenditure
            full[:, 2 * n + i * n : 2 * n + (i + 1) * n] = log_prices
            blocks.append(full @ self.matrix)
        return np.stack(blocks)


@dataclass(frozen=True)
class AidsFit:
    params: AidsParameters
    classes: tuple[str, ...]
    price_index: PriceIndex
    restriction: RestrictionMap
    free_params: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray
    sigma: np.ndarray
    iterations: int
    final_change: float
    mean_shares: np.ndarray
    mean_log_prices: np.ndarray
    n_obs: int
    fuels: dict[str, Fuel] = field(default_factory=dict)
    log: tuple[str, ...] = ()

    @property
    def dropped_equation(self) -> str:
        return self.classes[self.restriction.dropped]

    @property
    def free_parameter_names(self) -> list[str]:
        return self.restriction.names

    @property
    def sample_means(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean observed shares and mean log-prices, the default evaluation point."""
        return self.mean_shares, self.mean_log_prices

    @property
    def full_covariance(self) -> np.ndarray:
        t = self.restriction.matrix
        return t @ self.covariance @ t.T

    def restriction_residuals(self) -> dict[str, float]:
        return self.params.restriction_residuals()

    def predict(self, log_prices: np.ndarray, log_expenditure: np.ndarray, shares: np.ndarray | None = None) -> np.ndarray:
        """Fitted shares. Stone-index fits need the observed ``shares`` for the deflator."""
        log_prices = np.atleast_2d(log_prices)
        if self.price_index == PriceIndex.STONE:
            if shares is None:
                raise InvalidArgumentError("Stone-index predictions need observed shares")
            index = stone_price_index(log_prices, shares)
        else:
            index = translog_price_index(log_prices, self.params)
        return self.params.shares(log_prices, np.asarray(log_expenditure) - index)

    def fitted_shares(self, panel: FuelPanel) -> np.ndarray:
        return self.predict(panel.log_prices(), panel.log_expenditure(), panel.shares())

    def to_document(self) -> FitDocument:
        return FitDocument(
            classes=list(self.classes),
            fuels={k: v.value for k, v in self.fuels.items()},
            price_index=self.price_index,
            dropped_equation=self.dropped_equation,
            alpha0=self.params.alpha0,
            alpha=self.params.alpha.tolist(),
            beta=self.params.beta.tolist(),
            gamma=self.params.gamma.tolist(),
            free_parameter_names=self.free_parameter_names,
            free_parameters=self.free_params.tolist(),
            covariance=self.covariance.tolist(),
            full_covariance=self.full_covariance.tolist(),
            iterations=self.iterations,
            final_change=self.final_change,
            restriction_residuals=self.restriction_residuals(),
            mean_shares=self.mean_shares.tolist(),
            mean_log_prices=self.mean_log_prices.tolist(),
            observations=self.n_obs,
        )

    @classmethod
    def from_document(cls, doc: FitDocument) -> "AidsFit":
        restriction = RestrictionMap(doc.classes, doc.classes.index(doc.dropped_equation))
        free = np.asarray(doc.free_parameters, dtype=float)
        n = len(doc.classes)
        return cls(
            params=restriction.expand(free, alpha0=doc.alpha0),
            classes=tuple(doc.classes),
            price_index=doc.price_index,
            restriction=restriction,
            free_params=free,
            covariance=np.asarray(doc.covariance, dtype=float),
            residuals=np.zeros((0, n)),
            sigma=np.zeros((n - 1, n - 1)),
            iterations=doc.iterations,
            final_change=doc.final_change,
            mean_shares=np.asarray(doc.mean_shares, dtype=float),
            mean_log_prices=np.asarray(doc.mean_log_prices, dtype=float),
            n_obs=doc.observations,
            fuels={k: Fuel(v) for k, v in doc.fuels.items()},
        )


def default_options(**overrides) -> EstimatorOptions:
    values = {
        "index": PriceIndex(settings.price_index),
        "tol": settings.tolerance,
        "max_iter": settings.max_iter,
        "fgls_tol": settings.fgls_tolerance,
        "fgls_max_iter": settings.fgls_max_iter,
    }
    values.update(overrides)
    return EstimatorOptions(**values)


def fit_aids(panel: FuelPanel, options: EstimatorOptions | None = None) -> AidsFit:
    options = options or default_options()
    if options.group_prices:
        panel = panel.group_by_price()
    if len(panel.classes) < 2:
        raise InsufficientDataError("an AIDS system needs at least two vehicle classes")
    fuels = {c: panel.fuels[c] for c in panel.classes if c in panel.fuels}
    return fit_share_system(
        panel.log_prices(), panel.shares(), panel.log_expenditure(), panel.classes, options, fuels=fuels
    )


def fit_share_system(
    log_prices: np.ndarray,
    shares: np.ndarray,
    log_x: np.ndarray,
    classes: list[str] | tuple[str, ...],
    options: EstimatorOptions | None = None,
    fuels: dict[str, Fuel] | None = None,
) -> AidsFit:
    """Estimate the restricted system from (n, N) log-prices and shares and (n,) ln X."""
    options = options or default_options()
    classes = list(classes)
    if len(classes) < 2:
        raise InsufficientDataError("an AIDS system needs at least two vehicle classes")
    if log_prices.shape != shares.shape or log_prices.shape != (len(log_x), len(classes)):
        raise InvalidArgumentError(
            f"inconsistent shapes: log_prices {log_prices.shape}, shares {shares.shape}, "
            f"log expenditure {np.shape(log_x)}"
        )
    _check_identification(log_prices, classes)

    if options.dropped_equation is None:
        dropped = len(classes) - 1
    elif options.dropped_equation in classes:
        dropped = classes.index(options.dropped_equation)
    else:
        raise InvalidArgumentError(f"dropped equation {options.dropped_equation!r} is not a class in the panel")
    restriction = RestrictionMap(classes, dropped)
    notes = [f"dropped equation: {classes[dropped]} (recovered from adding-up)"]
    logger.info("fitting AIDS on %d observations x %d classes; %s", len(log_x), len(classes), notes[0])

    y = shares[:, restriction.kept].T
    real_x = log_x - stone_price_index(log_prices, shares)
    _check_rank(restriction.design(log_prices, real_x), restriction, classes)
    free, covariance, sigma = _estimate_pass(restriction, log_prices, real_x, y, options)

    iterations, change = 1, 0.0
    if options.index == PriceIndex.TRANSLOG:
        while True:
            params = restriction.expand(free)
            real_x = log_x - translog_price_index(log_prices, params)
            updated, covariance, sigma = _estimate_pass(restriction, log_prices, real_x, y, options)
            change = float(np.abs(updated - free).max())
            free = updated
            iterations += 1
            logger.debug("re-linearisation %d: max parameter change %.3e", iterations, change)
            if change < options.tol:
                break
            if iterations >= options.max_iter:
                raise ConvergenceError(
                    f"translog re-linearisation did not converge after {iterations} iterations "
                    f"(last change {change:.3e})",
                    iterations=iterations,
                    change=change,
                )
    else:
        notes.append("Stone price index (single pass)")
        logger.info("Stone price index: single FGLS pass, no re-linearisation")

    params = restriction.expand(free)
    residuals = shares - params.shares(log_prices, real_x)
    notes.append(f"converged in {iterations} iteration(s), final change {change:.3e}")
    logger.info("AIDS fit %s", notes[-1])

    return AidsFit(
        params=params,
        classes=tuple(classes),
        price_index=options.index,
        restriction=restriction,
        free_params=free,
        covariance=covariance,
        residuals=residuals,
        sigma=sigma,
        iterations=iterations,
        final_change=change,
        mean_shares=shares.mean(axis=0),
        mean_log_prices=log_prices.mean(axis=0),
        n_obs=len(log_x),
        fuels=dict(fuels or {}),
        log=tuple(notes),
    )


def _check_identification(log_prices: np.ndarray, classes: list[str]) -> None:
    if len(np.unique(log_prices, axis=0)) < 2:
        raise InsufficientDataError("need at least two distinct price vectors")
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            if np.array_equal(log_prices[:, a], log_prices[:, b]):
                raise RankDeficiencyError(
                    f"classes {classes[a]} and {classes[b]} share an identical price series; "
                    "their cross-price parameters are not identified (use --group-prices)",
                    collinear=(classes[a], classes[b]),
                )


def _check_rank(design: np.ndarray, restriction: RestrictionMap, classes: list[str]) -> None:
    xtx = np.einsum("ink,inl->kl", design, design)
    rank = np.linalg.matrix_rank(xtx)
    if rank < restriction.n_free:
        _, _, vt = np.linalg.svd(xtx)
        null = np.abs(vt[-1])
        involved = [restriction.names[i] for i in np.flatnonzero(null > 1e-6 * null.max())]
        goods = [c for c in classes if any(f"[{c}" in n or f",{c}]" in n for n in involved)]
        raise RankDeficiencyError(
            f"regressor matrix is rank deficient ({rank} < {restriction.n_free}); "
            f"collinear parameters: {', '.join(involved)}",
            collinear=goods,
        )


def _price_column(good: str) -> str:
    return f"lnp[{good}]"


def _share_system(restriction: RestrictionMap, log_prices: np.ndarray, real_x: np.ndarray, y: np.ndarray) -> SUR:
    """SUR over the kept equations with homogeneity and symmetry added as constraints."""
    classes = restriction.classes
    price_columns = [_price_column(c) for c in classes]
    equations = {}
    for row, k in enumerate(restriction.kept):
        exog = pd.DataFrame(log_prices, columns=price_columns)
        exog.insert(0, "const", 1.0)
        exog["real_x"] = real_x
        equations[classes[k]] = {"dependent": pd.Series(y[row], name=f"w[{classes[k]}]"), "exog": exog}
    try:
        model = SUR(equations)
    except ValueError as exc:
        raise RankDeficiencyError(f"share equations cannot be estimated: {exc}") from exc

    names = model.param_names
    rows = []
    for k in restriction.kept:
        homogeneity = pd.Series(0.0, index=names)
        homogeneity[[f"{classes[k]}_{column}" for column in price_columns]] = 1.0
        rows.append(homogeneity)
    for a, k in enumerate(restriction.kept):
        for l in restriction.kept[a + 1 :]:
            symmetry = pd.Series(0.0, index=names)
            symmetry[f"{classes[k]}_{_price_column(classes[l])}"] = 1.0
            symmetry[f"{classes[l]}_{_price_column(classes[k])}"] = -1.0
            rows.append(symmetry)
    model.add_constraints(pd.DataFrame(rows, columns=names))
    return model


def _free_selection(restriction: RestrictionMap, param_names: list[str]) -> np.ndarray:
    """Rows picking the free parameters, in ``restriction.names`` order, out of the SUR vector."""
    classes = restriction.classes
    picks = [f"{classes[k]}_const" for k in restriction.kept]
    picks += [f"{classes[k]}_real_x" for k in restriction.kept]
    for a, k in enumerate(restriction.kept):
        picks += [f"{classes[k]}_{_price_column(classes[l])}" for l in restriction.kept[a:]]
    position = {name: i for i, name in enumerate(param_names)}
    select = np.zeros((len(picks), len(param_names)))
    for row, name in enumerate(picks):
        select[row, position[name]] = 1.0
    return select


def _singular(sigma: np.ndarray, y: np.ndarray) -> bool:
    eigenvalues = np.linalg.eigvalsh(sigma)
    if not np.all(np.isfinite(eigenvalues)):
        return True
    return bool(eigenvalues.min() <= 1e-12 * max(eigenvalues.max(), float(np.mean(y**2))))


def _estimate_pass(
    restriction: RestrictionMap,
    log_prices: np.ndarray,
    real_x: np.ndarray,
    y: np.ndarray,
    options: EstimatorOptions,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One iterated FGLS pass at fixed real expenditure.

    Returns the free parameters, their heteroskedasticity-robust covariance and the
    cross-equation residual covariance.
    """
    n_eq = len(restriction.kept)
    flat = np.ptp(y, axis=1) <= 1e-12
    if flat.all():
        logger.warning("shares do not vary; there is no price or expenditure response to estimate")
        alpha = np.zeros(restriction.n_goods)
        alpha[restriction.kept] = y.mean(axis=1)
        alpha[restriction.dropped] = 1.0 - alpha.sum()
        flat_params = AidsParameters(
            alpha=alpha,
            beta=np.zeros(restriction.n_goods),
            gamma=np.zeros((restriction.n_goods, restriction.n_goods)),
        )
        n_free = restriction.n_free
        return restriction.contract(flat_params), np.zeros((n_free, n_free)), np.zeros((n_eq, n_eq))
    if flat.any():
        constant = [restriction.classes[k] for k, f in zip(restriction.kept, flat) if f]
        raise EstimationError(f"shares of {', '.join(constant)} do not vary across observations")

    model = _share_system(restriction, log_prices, real_x, y)
    results = model.fit(method="ols", cov_type="robust")
    if _singular(results.sigma.to_numpy(), y):
        logger.warning("residual covariance is singular; keeping equation-by-equation least squares")
    else:
        results = model.fit(
            method="gls",
            full_cov=True,
            iterate=True,
            iter_limit=options.fgls_max_iter,
            tol=options.fgls_tol,
            cov_type="robust",
        )
        logger.debug("FGLS pass finished after %d iteration(s)", results.iterations)

    select = _free_selection(restriction, model.param_names)
    covariance = select @ results.cov.to_numpy() @ select.T
    return select @ results.params.to_numpy(), 0.5 * (covariance + covariance.T), results.sigma.to_numpy()
