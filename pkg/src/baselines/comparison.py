"""Differencing estimators: observed-series contrasts and difference-in-differences."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import stats

from src.baselines.common import BaselineFit, BaselineMethod, focal_unit, require_kind
from src.baselines.regression import lm_control_path
from src.core.logging_setup import get_logger
from src.core.types import DatePath, ScenarioKind, SeriesPanel

logger = get_logger("baselines.comparison", Path("logs"))


def observed_y(panel: SeriesPanel, *, level: float = 0.95) -> BaselineFit:
    """Treated series against the mean of controls, the single control, or the LM control level."""
    kind = require_kind(
        panel,
        (ScenarioKind.ONE_MANY, ScenarioKind.ONE_ONE, ScenarioKind.ONE_NONE),
        BaselineMethod.OBSERVED_Y,
    )
    h = np.arange(panel.post_length)
    treated = focal_unit(panel).path[panel.t_c :]
    if kind is ScenarioKind.ONE_NONE:
        control, se = lm_control_path(panel, level=level)
        effect = treated - control
        half = stats.norm.ppf(0.5 + level / 2.0) * se
        date = DatePath(
            horizon_index=h,
            estimate=effect,
            lower=effect - half,
            upper=effect + half,
            level=level,
            std_error=np.full(h.size, se),
        )
        return BaselineFit(
            method=BaselineMethod.OBSERVED_Y,
            coefficients=np.array([control[0]]),
            residual_variance=float(se**2),
            date=date,
            names=("control_level",),
        )

    controls = np.vstack([u.path[panel.t_c :] for u in panel.control_units()])
    counterfactual = controls.mean(axis=0)
    effect = treated - counterfactual
    return BaselineFit(
        method=BaselineMethod.OBSERVED_Y,
        coefficients=np.array([]),
        residual_variance=float(np.var(effect)),
        date=DatePath(horizon_index=h, estimate=effect, level=level),
    )


def fit_did(panel: SeriesPanel, *, level: float = 0.95) -> BaselineFit:
    """Per-period post difference minus the difference of pre-period means."""
    require_kind(panel, (ScenarioKind.ONE_ONE,), BaselineMethod.DID)
    treated = panel.treated_units()[0].path
    control = panel.control_units()[0].path
    pre_gap = treated[: panel.t_c].mean() - control[: panel.t_c].mean()
    effect = (treated[panel.t_c :] - control[panel.t_c :]) - pre_gap
    return BaselineFit(
        method=BaselineMethod.DID,
        coefficients=np.array([pre_gap]),
        residual_variance=float(np.var(treated[: panel.t_c] - control[: panel.t_c] - pre_gap)),
        date=DatePath(horizon_index=np.arange(panel.post_length), estimate=effect, level=level),
        names=("pre_gap",),
    )
