"""Intervention design matrix: lagged outcome plus spot, persistent and trend indicators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.core.errors import ValidationError
from src.core.types import SeriesPanel, UnitSeries, frozen_array


def indicator_columns(times: np.ndarray, t_c: int, treated: bool) -> np.ndarray:
    """Spot, persistent and trend indicators at the given time indices, shape (len(times), 3)."""
    times = np.asarray(times, dtype=int)
    out = np.zeros((times.size, 3))
    if not treated:
        return out
    after = times >= t_c
    out[:, 0] = times == t_c
    out[:, 1] = after
    out[:, 2] = np.where(after, times - t_c + 1, 0)
    return out


@dataclass(frozen=True, slots=True)
class InterventionDesign:
    """Rows of the design matrix, each of length T, indexed by time 0..T−1.

    ``lagged_outcome[j]`` is y_j; the indicator rows hold their value at time j. The
    regression for observation y_t pairs y_{t−1} with the indicators at time t, see
    :meth:`regressors`.
    """

    lagged_outcome: np.ndarray
    spot: np.ndarray
    persistent: np.ndarray
    trend: np.ndarray
    t_c: int
    treated: bool

    def __post_init__(self) -> None:
        for name in ("lagged_outcome", "spot", "persistent", "trend"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))

    @property
    def length(self) -> int:
        return int(self.lagged_outcome.size)

    def rows(self) -> np.ndarray:
        return np.vstack([self.lagged_outcome, self.spot, self.persistent, self.trend])

    def regressors(self) -> np.ndarray:
        """(T, 4) matrix; row t−1 is (y_{t−1}, spot_t, persistent_t, trend_t) for t = 1..T."""
        times = np.arange(1, self.length + 1)
        indicators = indicator_columns(times, self.t_c, self.treated)
        return np.column_stack([self.lagged_outcome, indicators])


def build_design(panel: SeriesPanel, unit: UnitSeries) -> InterventionDesign:
    if unit.path.size != panel.horizon + 1:
        raise ValidationError("unit path does not match the panel horizon")
    times = np.arange(panel.horizon)
    indicators = indicator_columns(times, panel.t_c, unit.treated)
    return InterventionDesign(
        lagged_outcome=unit.path[:-1],
        spot=indicators[:, 0],
        persistent=indicators[:, 1],
        trend=indicators[:, 2],
        t_c=panel.t_c,
        treated=unit.treated,
    )
