"""Estimator registry: scenario compatibility and a single dispatch entry point."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Optional

import numpy as np

from src.baselines.arimax import fit_arimax
from src.baselines.comparison import fit_did, observed_y
from src.baselines.regression import fit_lm, fit_lm_ar1
from src.baselines.scm import fit_scm
from src.core.config_loader import RunSettings
from src.core.errors import IncompatibleMethod, PerfectSeparation, ValidationError
from src.core.logging_setup import get_logger
from src.core.types import DatePath, ScenarioKind, SeriesPanel
from src.dipw.estimator import dipw_estimate
from src.dipw.propensity import fit_propensity, known_propensity
from src.dlm.counterfactual import DlmEstimate, estimate_dlm
from src.dlm.model import DlmSpec

logger = get_logger("tools.methods", Path("logs"))

_SINGLE = frozenset({ScenarioKind.ONE_MANY, ScenarioKind.ONE_ONE, ScenarioKind.ONE_NONE})
COMPATIBILITY: Dict[str, FrozenSet[ScenarioKind]] = {
    "dipw": frozenset({ScenarioKind.MANY_MANY}),
    "panel-mean": frozenset({ScenarioKind.MANY_MANY}),
    "dlm": _SINGLE,
    "lm": _SINGLE,
    "lm-ar1": _SINGLE,
    "arimax": _SINGLE,
    "y": _SINGLE,
    "scm": frozenset({ScenarioKind.ONE_MANY}),
    "did": frozenset({ScenarioKind.ONE_ONE}),
}
METHODS = tuple(COMPATIBILITY)


@dataclass(slots=True)
class MethodResult:
    method: str
    date: DatePath
    dlm: Optional[DlmEstimate] = None
    info: Dict[str, str] = field(default_factory=dict)


def compatible(method: str, kind: ScenarioKind | str) -> bool:
    if method not in COMPATIBILITY:
        raise ValidationError(f"Unknown method {method!r}; choose from {', '.join(METHODS)}")
    return ScenarioKind.parse(kind) in COMPATIBILITY[method]


def require_compatible(methods: Iterable[str], kind: ScenarioKind | str) -> None:
    kind = ScenarioKind.parse(kind)
    for method in methods:
        if not compatible(method, kind):
            raise IncompatibleMethod(f"{method} cannot run on {kind.value} scenarios")


def dlm_spec_from_settings(settings: RunSettings) -> DlmSpec:
    cfg = settings.dlm
    return DlmSpec.default(intercept=cfg.intercept, form=cfg.form, prior_lag=cfg.prior_lag, n0=cfg.n0, s0=cfg.s0)


def _dipw(
    panel: SeriesPanel,
    settings: RunSettings,
    *,
    stabilized: bool,
    propensity: str,
    true_propensity: Optional[np.ndarray],
) -> MethodResult:
    info = {"propensity": propensity}
    if propensity == "known":
        prop = known_propensity(panel, true_propensity, clip=settings.dipw.clip)
    else:
        try:
            prop = fit_propensity(panel, clip=settings.dipw.clip)
        except PerfectSeparation as exc:
            logger.warning("Falling back to known propensities: %s", exc)
            prop = known_propensity(panel, true_propensity, clip=settings.dipw.clip)
            info["propensity"] = "known-fallback"
    est = dipw_estimate(panel, prop, stabilized)
    return MethodResult(method="dipw", date=est.to_date_path(settings.eval.level), info=info)


def estimate(
    method: str,
    panel: SeriesPanel,
    settings: Optional[RunSettings] = None,
    seed: int = 0,
    *,
    stabilized: Optional[bool] = None,
    propensity: Optional[str] = None,
    true_propensity: Optional[np.ndarray] = None,
    draws: Optional[int] = None,
    contrast: Optional[str] = None,
    keep_samples: bool = True,
) -> MethodResult:
    """Run one estimator on a panel; flags override the run settings."""
    settings = settings or RunSettings()
    require_compatible([method], panel.kind())
    level = settings.eval.level

    if method == "dipw":
        return _dipw(
            panel,
            settings,
            stabilized=settings.dipw.stabilized if stabilized is None else stabilized,
            propensity=propensity or settings.dipw.propensity,
            true_propensity=true_propensity,
        )
    if method == "panel-mean":
        est = dipw_estimate(panel, known_propensity(panel), True)
        return MethodResult(method=method, date=est.to_date_path(level))
    if method == "dlm":
        fit = estimate_dlm(
            panel,
            dlm_spec_from_settings(settings),
            draws=draws or settings.dlm.draws,
            seed=seed,
            grid=settings.dlm.grid,
            mode=contrast or settings.dlm.contrast,
            level=level,
            keep_samples=keep_samples,
        )
        delta, beta_v = fit.posterior.chosen_discounts
        return MethodResult(method=method, date=fit.date, dlm=fit, info={"delta": str(delta), "beta_v": str(beta_v)})

    fitters = {
        "lm": fit_lm,
        "lm-ar1": fit_lm_ar1,
        "arimax": fit_arimax,
        "y": observed_y,
        "scm": fit_scm,
        "did": fit_did,
    }
    return MethodResult(method=method, date=fitters[method](panel, level=level).date)
