"""Static regressions on the intervention indicators, with and without an AR(1) term.

Both fits regenerate treated and untreated mean paths from the coefficients alone and
propagate the coefficient covariance to the effect path with the delta method. The static
LM leaves the serial dependence in its residuals, so its covariance is a sandwich under
AR(1) errors and its intervals use Student-t quantiles on the effective sample size.
"""
from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
import statsmodels.api as sm
from statsmodels.tsa.stattools import acf

from src.baselines.common import (
    BaselineFit,
    BaselineMethod,
    focal_unit,
    indicator_effect_jacobian,
    require_length,
    zero_date,
)
from src.core.design import indicator_columns
from src.core.errors import RankDeficient
from src.core.logging_setup import get_logger
from src.core.types import DatePath, SeriesPanel

logger = get_logger("baselines.regression", Path("logs"))

LM_NAMES = ("intercept", "spot", "persistent", "trend")
LMAR1_NAMES = ("intercept", "lag", "spot", "persistent", "trend")
MAX_RESIDUAL_RHO = 0.99


def _ols(y: np.ndarray, X: np.ndarray, method: BaselineMethod):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficient(f"{method.value} design is collinear")
    return sm.OLS(y, X).fit()


def _control_only(panel: SeriesPanel, y: np.ndarray, X: np.ndarray, names: Tuple[str, ...], method: BaselineMethod, level: float) -> BaselineFit:
    """Fit without the all-zero indicator columns; the effect is identically zero."""
    keep = [i for i, n in enumerate(names) if n not in ("spot", "persistent", "trend")]
    result = _ols(y, X[:, keep], method)
    coefficients = np.zeros(len(names))
    coefficients[keep] = result.params
    logger.debug("%s on an untreated series; effect is zero", method.value)
    return BaselineFit(
        method=method,
        coefficients=coefficients,
        residual_variance=float(result.scale),
        date=zero_date(panel, level),
        names=names,
    )


def ar1_sandwich(result, X: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """OLS coefficient covariance under AR(1) errors, with the error autocorrelation and t df.

    The lag-one residual autocorrelation gets the small-sample correction ρ + (1 + 3ρ)/n
    before it builds Σ_ij = s²ρ^|i−j|. The degrees of freedom are n(1 − ρ)/(1 + ρ) − k.
    """
    resid = np.asarray(result.resid, dtype=float)
    n, k = X.shape
    rho = 0.0
    if float(resid @ resid) > np.finfo(float).tiny:
        rho = float(acf(resid, nlags=1, fft=False)[1])
    if not np.isfinite(rho):
        rho = 0.0
    rho = float(np.clip(rho + (1.0 + 3.0 * rho) / n, -MAX_RESIDUAL_RHO, MAX_RESIDUAL_RHO))
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    sigma = float(result.scale) * np.power(rho, lags)
    bread = np.linalg.inv(X.T @ X)
    cov = bread @ X.T @ sigma @ X @ bread
    n_eff = min(float(n), n * (1.0 - rho) / (1.0 + rho))
    return cov, rho, max(n_eff - k, 1.0)


def fit_lm(panel: SeriesPanel, *, level: float = 0.95) -> BaselineFit:
    """OLS of y_t on intercept, spot, persistent and trend over t = 0..T."""
    require_length(panel, 5, BaselineMethod.LM)
    unit = focal_unit(panel)
    times = np.arange(panel.horizon + 1)
    X = np.column_stack([np.ones(times.size), indicator_columns(times, panel.t_c, unit.treated)])
    if not unit.treated:
        return _control_only(panel, unit.path, X, LM_NAMES, BaselineMethod.LM, level)

    result = _ols(unit.path, X, BaselineMethod.LM)
    params = np.asarray(result.params)
    cov, rho, df = ar1_sandwich(result, X)
    J = np.column_stack([np.zeros(panel.post_length), indicator_effect_jacobian(panel.post_length)])
    effect = J @ params
    se = np.sqrt(np.clip(np.einsum("ij,jk,ik->i", J, cov, J), 0.0, None))
    bse = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    logger.debug("LM residual autocorrelation %.3f, t df %.1f", rho, df)
    return BaselineFit(
        method=BaselineMethod.LM,
        coefficients=params,
        residual_variance=float(result.scale),
        date=DatePath.from_std_error(np.arange(panel.post_length), effect, se, level=level, df=df),
        std_errors=bse,
        names=LM_NAMES,
        extra={"intercept_se": float(bse[0]), "rho": rho, "df": df},
    )


def ar1_effect_path(params: np.ndarray, H: int) -> Tuple[np.ndarray, np.ndarray]:
    """Effect d_h = φ d_{h−1} + s·1{h=0} + p + r(h+1) and its Jacobian in (c, φ, s, p, r)."""
    _, phi, s, p, r = params
    effect = np.empty(H)
    jac = np.zeros((H, 5))
    prev = 0.0
    prev_jac = np.zeros(5)
    for h in range(H):
        shock = s * (h == 0) + p + r * (h + 1)
        effect[h] = phi * prev + shock
        row = phi * prev_jac
        row[1] += prev
        row[2] += float(h == 0)
        row[3] += 1.0
        row[4] += h + 1.0
        jac[h] = row
        prev, prev_jac = effect[h], row
    return effect, jac


def fit_lm_ar1(panel: SeriesPanel, *, level: float = 0.95) -> BaselineFit:
    """OLS of y_t on intercept, y_{t−1} and the indicators over t = 1..T."""
    require_length(panel, 5, BaselineMethod.LMAR1)
    unit = focal_unit(panel)
    times = np.arange(1, panel.horizon + 1)
    X = np.column_stack([np.ones(times.size), unit.path[:-1], indicator_columns(times, panel.t_c, unit.treated)])
    y = unit.path[1:]
    if not unit.treated:
        return _control_only(panel, y, X, LMAR1_NAMES, BaselineMethod.LMAR1, level)

    result = _ols(y, X, BaselineMethod.LMAR1)
    params = np.asarray(result.params)
    cov = np.asarray(result.cov_params())
    effect, J = ar1_effect_path(params, panel.post_length)
    se = np.sqrt(np.clip(np.einsum("ij,jk,ik->i", J, cov, J), 0.0, None))
    return BaselineFit(
        method=BaselineMethod.LMAR1,
        coefficients=params,
        residual_variance=float(result.scale),
        date=DatePath.from_std_error(np.arange(panel.post_length), effect, se, level=level),
        std_errors=np.asarray(result.bse),
        names=LMAR1_NAMES,
    )


def lm_control_path(panel: SeriesPanel, *, level: float = 0.95) -> Tuple[np.ndarray, float]:
    """Untreated mean level of the focal series under LM and its standard error."""
    fit = fit_lm(panel, level=level)
    se = fit.extra.get("intercept_se")
    if se is None:
        se = float(np.sqrt(fit.residual_variance / (panel.horizon + 1)))
    return np.full(panel.post_length, fit.coefficient("intercept")), float(se)
