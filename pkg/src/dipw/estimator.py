"""Dynamic inverse-probability weighting of post-intervention trajectories."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.core.errors import DegenerateWeights, ValidationError
from src.core.logging_setup import get_logger
from src.core.types import DatePath, SeriesPanel, frozen_array
from src.dipw.propensity import PropensityFit

logger = get_logger("dipw.estimator", Path("logs"))


@dataclass(frozen=True, slots=True)
class DipwEstimate:
    """Arm means over t = t_c..T; ``tau`` is exactly ``mu1 - mu0``."""

    mu1: np.ndarray
    mu0: np.ndarray
    tau: np.ndarray
    stabilized: bool
    pointwise_se: np.ndarray
    treated_weights: np.ndarray
    control_weights: np.ndarray

    def __post_init__(self) -> None:
        for name in ("mu1", "mu0", "tau", "pointwise_se", "treated_weights", "control_weights"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))

    def to_date_path(self, level: float = 0.95) -> DatePath:
        return DatePath.from_std_error(np.arange(self.tau.size), self.tau, self.pointwise_se, level=level)


def dipw_estimate(panel: SeriesPanel, prop: PropensityFit, stabilized: bool = True) -> DipwEstimate:
    p = prop.p
    if p.size != panel.n_units:
        raise ValidationError("propensities are not aligned with the panel units")
    z = panel.treatment()
    post = panel.matrix()[:, panel.t_c :]
    n = panel.n_units

    w1 = z / p
    w0 = (1.0 - z) / (1.0 - p)
    if stabilized:
        s1, s0 = w1.sum(), w0.sum()
        if s1 <= 0.0 or s0 <= 0.0:
            raise DegenerateWeights("a stabilized weight denominator is zero")
        w1, w0 = w1 / s1, w0 / s0
        mu1 = w1 @ post
        mu0 = w0 @ post
        # Linearized influence terms of the ratio estimators.
        terms = n * (w1[:, None] * (post - mu1) - w0[:, None] * (post - mu0))
    else:
        w1, w0 = w1 / n, w0 / n
        mu1 = w1 @ post
        mu0 = w0 @ post
        terms = n * (w1[:, None] - w0[:, None]) * post

    tau = mu1 - mu0
    ddof = 1 if n > 1 else 0
    se = np.sqrt(terms.var(axis=0, ddof=ddof) / n)
    logger.debug("DIPW (%s) on %s units, tau[0]=%s", "stabilized" if stabilized else "unnormalized", n, tau[0])
    return DipwEstimate(
        mu1=mu1,
        mu0=mu0,
        tau=tau,
        stabilized=stabilized,
        pointwise_se=se,
        treated_weights=w1,
        control_weights=w0,
    )
