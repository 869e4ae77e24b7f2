"""Propensity scores from pre-intervention histories.

Features are summaries of y_0..y_{t_c−1} only; the logistic fit is statsmodels' Newton
solver. Perfect separation is reported so callers can fall back to known propensities.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import statsmodels.api as sm
from statsmodels.tools.sm_exceptions import ConvergenceWarning, HessianInversionWarning

from src.core.errors import PerfectSeparation, SingleArm, ValidationError
from src.core.logging_setup import get_logger
from src.core.types import SeriesPanel, frozen_array

try:  # statsmodels < 0.14 raises, newer releases warn
    from statsmodels.tools.sm_exceptions import PerfectSeparationError
except ImportError:  # pragma: no cover - depends on statsmodels version
    PerfectSeparationError = None  # type: ignore[assignment,misc]
try:
    from statsmodels.tools.sm_exceptions import PerfectSeparationWarning
except ImportError:  # pragma: no cover - depends on statsmodels version
    PerfectSeparationWarning = None  # type: ignore[assignment,misc]

logger = get_logger("dipw.propensity", Path("logs"))

PROPENSITY_CLIP = 1e-6
NEWTON_TOL = 1e-8
NEWTON_MAXITER = 100


def _pre(panel: SeriesPanel) -> np.ndarray:
    return panel.matrix()[:, : panel.t_c]


def _last_difference(panel: SeriesPanel) -> np.ndarray:
    pre = _pre(panel)
    if pre.shape[1] < 2:
        raise ValidationError("last-difference feature needs two pre-intervention points")
    return pre[:, -1] - pre[:, -2]


FEATURES: Dict[str, Callable[[SeriesPanel], np.ndarray]] = {
    "intercept": lambda panel: np.ones(panel.n_units),
    "last": lambda panel: _pre(panel)[:, -1],
    "mean": lambda panel: _pre(panel).mean(axis=1),
    "diff": _last_difference,
}


@dataclass(frozen=True, slots=True)
class FeatureSpec:
    """Named pre-intervention features: intercept, last (y_{t_c−1}), mean, diff."""

    names: Tuple[str, ...] = ("intercept", "last", "mean", "diff")

    def __post_init__(self) -> None:
        unknown = [n for n in self.names if n not in FEATURES]
        if unknown or not self.names:
            raise ValidationError(f"Unknown propensity features: {unknown or 'none given'}")

    def matrix(self, panel: SeriesPanel) -> np.ndarray:
        return np.column_stack([FEATURES[name](panel) for name in self.names])

    def describe(self) -> str:
        return "+".join(self.names)


@dataclass(frozen=True, slots=True)
class PropensityFit:
    p: np.ndarray
    feature_spec: Optional[FeatureSpec]
    coefficients: np.ndarray
    std_errors: Optional[np.ndarray] = None
    converged: bool = True
    source: str = "logistic"
    extra: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        p = frozen_array(self.p)
        if not np.all((p > 0.0) & (p < 1.0)):
            raise ValidationError("propensities must lie strictly inside (0, 1)")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "coefficients", frozen_array(self.coefficients))


def _require_both_arms(panel: SeriesPanel) -> np.ndarray:
    z = panel.treatment()
    if z.sum() == 0 or z.sum() == z.size:
        raise SingleArm("propensity estimation needs treated and control units")
    return z


def known_propensity(panel: SeriesPanel, p: Optional[float | np.ndarray] = None, *, clip: float = PROPENSITY_CLIP) -> PropensityFit:
    """Design propensities; defaults to the treated share n_treated/n for every unit."""
    z = _require_both_arms(panel)
    values = np.full(panel.n_units, z.mean()) if p is None else np.broadcast_to(np.asarray(p, float), z.shape)
    values = np.clip(values, clip, 1.0 - clip)
    return PropensityFit(p=values, feature_spec=None, coefficients=np.array([]), source="known")


def fit_propensity(
    panel: SeriesPanel,
    feature_spec: Optional[FeatureSpec] = None,
    *,
    clip: float = PROPENSITY_CLIP,
    maxiter: int = NEWTON_MAXITER,
) -> PropensityFit:
    spec = feature_spec or FeatureSpec()
    z = _require_both_arms(panel)
    X = spec.matrix(panel)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = sm.Logit(z, X).fit(method="newton", maxiter=maxiter, tol=NEWTON_TOL, disp=0)
        except np.linalg.LinAlgError as exc:
            raise PerfectSeparation(f"singular information matrix ({spec.describe()})") from exc
        except Exception as exc:
            if PerfectSeparationError is not None and isinstance(exc, PerfectSeparationError):
                raise PerfectSeparation(str(exc)) from exc
            raise

    categories = {w.category for w in caught}
    separated = PerfectSeparationWarning is not None and PerfectSeparationWarning in categories
    params = np.asarray(result.params, dtype=float)
    if separated or not np.all(np.isfinite(params)) or result.llf > -1e-6:
        logger.warning("Perfect separation with features %s (llf=%s)", spec.describe(), result.llf)
        raise PerfectSeparation(f"features {spec.describe()} separate the arms")

    gradient = np.max(np.abs(result.model.score(params)))
    converged = bool(gradient < NEWTON_TOL or result.mle_retvals.get("converged", False))
    if ConvergenceWarning in categories or not converged:
        logger.info("Logit stopped with gradient max-norm %s after %s iterations", gradient, maxiter)
    if HessianInversionWarning in categories:
        logger.info("Logit Hessian inversion warning; standard errors may be unreliable")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bse = np.asarray(result.bse, dtype=float)
    p = np.clip(result.predict(X), clip, 1.0 - clip)
    return PropensityFit(
        p=p,
        feature_spec=spec,
        coefficients=params,
        std_errors=bse,
        converged=converged,
        extra={"llf": float(result.llf), "gradient": float(gradient)},
    )
