"""Shared records and helpers for the comparison estimators."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional

import numpy as np

from src.core.errors import ValidationError, WrongScenario
from src.core.types import DatePath, ScenarioKind, SeriesPanel, UnitSeries, frozen_array


class BaselineMethod(str, Enum):
    LM = "lm"
    LMAR1 = "lm-ar1"
    ARIMAX = "arimax"
    OBSERVED_Y = "y"
    SCM = "scm"
    DID = "did"


@dataclass(frozen=True, slots=True)
class BaselineFit:
    method: BaselineMethod
    coefficients: np.ndarray
    residual_variance: float
    date: DatePath
    std_errors: Optional[np.ndarray] = None
    names: tuple[str, ...] = ()
    extra: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", frozen_array(self.coefficients))
        if self.std_errors is not None:
            object.__setattr__(self, "std_errors", frozen_array(self.std_errors))

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])


def focal_unit(panel: SeriesPanel) -> UnitSeries:
    """Unit fitted by single-series methods: the first treated unit, else the first unit."""
    return panel.units[panel.focal_index()]


def require_kind(panel: SeriesPanel, allowed: Iterable[ScenarioKind], method: BaselineMethod) -> ScenarioKind:
    kind = panel.kind()
    allowed = tuple(allowed)
    if kind not in allowed:
        names = ", ".join(k.value for k in allowed)
        raise WrongScenario(f"{method.value} is defined for {names}, not {kind.value}")
    return kind


def require_length(panel: SeriesPanel, minimum: int, method: BaselineMethod) -> None:
    if panel.horizon + 1 < minimum:
        raise ValidationError(f"{method.value} needs at least {minimum} observations")


def zero_date(panel: SeriesPanel, level: float = 0.95) -> DatePath:
    """Identically zero effect with degenerate bounds."""
    zeros = np.zeros(panel.post_length)
    return DatePath.from_std_error(np.arange(panel.post_length), zeros, zeros, level=level)


def indicator_effect_jacobian(H: int) -> np.ndarray:
    """Rows d DATE(h) / d(spot, persistent, trend) for an effect s·1{h=0} + p + r(h+1)."""
    h = np.arange(H)
    return np.column_stack([(h == 0).astype(float), np.ones(H), h + 1.0])
