"""Synthetic control on the simplex with in-space placebo bands."""
from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
from scipy.optimize import nnls

from src.baselines.common import BaselineFit, BaselineMethod, require_kind
from src.core.errors import InfeasibleFit
from src.core.logging_setup import get_logger
from src.core.types import DatePath, ScenarioKind, SeriesPanel

logger = get_logger("baselines.scm", Path("logs"))

KKT_TOL = 1e-8


def _solve_on_support(A: np.ndarray, y: np.ndarray, support: np.ndarray) -> Tuple[np.ndarray, float]:
    """Equality-constrained least squares on the active columns via the KKT system."""
    As = A[:, support]
    k = support.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = As.T @ As
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([As.T @ y, [1.0]])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:k], float(sol[k])


def simplex_weights(y: np.ndarray, A: np.ndarray) -> Tuple[np.ndarray, float]:
    """Minimise ||y − A w||² over w ≥ 0, Σw = 1; returns weights and the KKT residual."""
    n = A.shape[1]
    if n == 1:
        return np.ones(1), 0.0
    scale = max(1.0, float(np.abs(A).max()), float(np.abs(y).max()))
    penalty = 1e3 * scale * np.sqrt(A.shape[0])
    start, _ = nnls(np.vstack([A, penalty * np.ones(n)]), np.concatenate([y, [penalty]]))
    support = np.flatnonzero(start > 0.0)
    if support.size == 0:
        support = np.array([int(np.argmin(((A - y[:, None]) ** 2).sum(axis=0)))])

    w = np.zeros(n)
    residual = np.inf
    for _ in range(4 * n):
        ws, nu = _solve_on_support(A, y, support)
        if np.any(ws < 0.0):
            support = support[ws > np.min(ws)] if support.size > 1 else support
            continue
        w = np.zeros(n)
        w[support] = ws
        # Stationarity: A'(Aw − y) + ν·1 − μ = 0 with μ ≥ 0 off the support.
        multipliers = A.T @ (A @ w - y) + nu
        inactive = np.setdiff1d(np.arange(n), support)
        residual = float(np.max(np.abs(multipliers[support]), initial=0.0))
        if inactive.size and multipliers[inactive].min() < -KKT_TOL * scale**2:
            support = np.sort(np.append(support, inactive[np.argmin(multipliers[inactive])]))
            continue
        break
    else:
        logger.warning("Active-set refinement did not settle; using renormalised NNLS weights")
        w = start / start.sum()
    w = np.clip(w, 0.0, None)
    return w / w.sum(), residual


def _gap(treated: np.ndarray, donors: np.ndarray, t_c: int) -> Tuple[np.ndarray, np.ndarray]:
    w, _ = simplex_weights(treated[:t_c], donors[:, :t_c].T)
    return treated[t_c:] - w @ donors[:, t_c:], w


def placebo_gaps(controls: np.ndarray, t_c: int) -> np.ndarray:
    """Post-period gaps of each control against the remaining controls, shape (J, H)."""
    J = controls.shape[0]
    gaps = []
    for j in range(J):
        donors = np.delete(controls, j, axis=0)
        gaps.append(_gap(controls[j], donors, t_c)[0])
    return np.vstack(gaps)


def fit_scm(panel: SeriesPanel, *, level: float = 0.95) -> BaselineFit:
    require_kind(panel, (ScenarioKind.ONE_MANY,), BaselineMethod.SCM)
    controls = np.vstack([u.path for u in panel.control_units()])
    if controls.shape[0] < 2:
        raise InfeasibleFit("synthetic control needs at least two donor units")
    treated = panel.treated_units()[0].path
    effect, w = _gap(treated, controls, panel.t_c)
    deviations = np.abs(placebo_gaps(controls, panel.t_c))
    half = np.quantile(deviations, level, axis=0)
    pre_fit = treated[: panel.t_c] - w @ controls[:, : panel.t_c]
    logger.debug("SCM weights on %s donors, %s active", w.size, int(np.count_nonzero(w)))
    return BaselineFit(
        method=BaselineMethod.SCM,
        coefficients=w,
        residual_variance=float(pre_fit @ pre_fit) / panel.t_c,
        date=DatePath(
            horizon_index=np.arange(panel.post_length),
            estimate=effect,
            lower=effect - half,
            upper=effect + half,
            level=level,
            deviations=deviations,
        ),
        names=tuple(u.unit_id for u in panel.control_units()),
    )
