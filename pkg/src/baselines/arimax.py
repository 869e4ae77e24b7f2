"""Regression on the intervention indicators with ARIMA(1,1,1) errors, fitted by CSS.

The regression acts on levels; the residual series is differenced once and the ARMA(1,1)
innovations are computed conditionally on the first two observations. AR and MA
coefficients are optimised through a tanh map so both roots stay outside the unit circle.
"""
from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
import statsmodels.api as sm
from scipy import optimize
from scipy.signal import lfilter
from statsmodels.tools.numdiff import approx_hess3

from src.baselines.common import (
    BaselineFit,
    BaselineMethod,
    focal_unit,
    indicator_effect_jacobian,
    require_length,
)
from src.core.design import indicator_columns
from src.core.errors import DegenerateVariance, NonConvergence
from src.core.logging_setup import get_logger
from src.core.types import DatePath, SeriesPanel

logger = get_logger("baselines.arimax", Path("logs"))

NCOND = 2  # one difference plus one AR lag
GTOL = 1e-8
MAXITER = 500
ARIMAX_NAMES = ("ar", "ma", "spot", "persistent", "trend")


def css_residuals(y: np.ndarray, X: np.ndarray, phi: float, theta: float, beta: np.ndarray) -> np.ndarray:
    """Innovations e_t for t ≥ NCOND; earlier innovations are conditioned to zero."""
    u = y - X @ beta if X.size else y
    w = np.diff(u, prepend=u[0])
    v = w[NCOND:] - phi * w[NCOND - 1 : -1]
    return lfilter([1.0], [1.0, theta], v)


def css_objective(y: np.ndarray, X: np.ndarray, params: np.ndarray) -> float:
    """Half log of the conditional innovation variance."""
    resid = css_residuals(y, X, params[0], params[1], params[2:])
    sigma2 = float(resid @ resid) / resid.size
    if not np.isfinite(sigma2) or sigma2 <= 0.0:
        return 1e10
    return 0.5 * np.log(sigma2)


def _to_natural(raw: np.ndarray) -> np.ndarray:
    out = raw.copy()
    out[:2] = np.tanh(raw[:2])
    return out


def _initial(y: np.ndarray, X: np.ndarray) -> np.ndarray:
    if not X.size:
        return np.zeros(2)
    dy, dX = np.diff(y), np.diff(X, axis=0)
    beta = np.asarray(sm.OLS(dy, dX).fit().params) if np.linalg.matrix_rank(dX) == dX.shape[1] else np.zeros(X.shape[1])
    return np.concatenate([[0.0, 0.0], beta])


def fit_css(y: np.ndarray, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float, int]:
    """Natural-scale estimates, their covariance, innovation variance and residual count."""
    if np.ptp(y) == 0.0:
        raise DegenerateVariance("series is constant")
    objective = lambda raw: css_objective(y, X, _to_natural(raw))  # noqa: E731
    start = _initial(y, X)
    result = optimize.minimize(objective, start, method="BFGS", options={"gtol": GTOL, "maxiter": MAXITER})
    if result.status == 1:
        raise NonConvergence(f"CSS optimiser hit {MAXITER} iterations")
    if not result.success:
        logger.info("CSS optimiser stopped early: %s", result.message)
    params = _to_natural(result.x)
    resid = css_residuals(y, X, params[0], params[1], params[2:])
    nu = resid.size
    sigma2 = float(resid @ resid) / nu
    if sigma2 <= 1e-300:
        raise DegenerateVariance("innovation variance collapsed to zero")
    hess = approx_hess3(params, lambda p: css_objective(y, X, p))
    try:
        cov = np.linalg.pinv(hess * nu)
    except np.linalg.LinAlgError:
        cov = np.full((params.size, params.size), np.inf)
    return params, cov, sigma2, nu


def fit_arimax(panel: SeriesPanel, *, level: float = 0.95) -> BaselineFit:
    require_length(panel, 10, BaselineMethod.ARIMAX)
    unit = focal_unit(panel)
    times = np.arange(panel.horizon + 1)
    y = unit.path
    X = indicator_columns(times, panel.t_c, True) if unit.treated else np.empty((times.size, 0))

    params, cov, sigma2, nu = fit_css(y, X)
    se_all = np.sqrt(np.abs(np.diag(cov)))
    H = panel.post_length
    if unit.treated:
        J = np.column_stack([np.zeros((H, 2)), indicator_effect_jacobian(H)])
        coefficients = params
    else:
        J = np.zeros((H, 5))
        coefficients = np.concatenate([params, np.zeros(3)])
        se_all = np.concatenate([se_all, np.zeros(3)])
        cov = np.pad(cov, ((0, 3), (0, 3)))
    effect = J @ coefficients
    se = np.sqrt(np.clip(np.einsum("ij,jk,ik->i", J, cov, J), 0.0, None))
    logger.debug("ARIMAX fit: ar=%.4f ma=%.4f sigma2=%.3g (n=%s)", params[0], params[1], sigma2, nu)
    return BaselineFit(
        method=BaselineMethod.ARIMAX,
        coefficients=coefficients,
        residual_variance=sigma2,
        date=DatePath.from_std_error(np.arange(H), effect, se, level=level),
        std_errors=se_all,
        names=ARIMAX_NAMES,
    )
