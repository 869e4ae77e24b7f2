"""Shared domain records: unit trajectories, panels, and time-indexed effect paths.

All records are frozen after construction; their numpy buffers are marked read-only so
they can be handed to worker processes and threads without copying.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.core.errors import MissingBounds, SingleArm, ValidationError

COMPONENT_NAMES: Tuple[str, str, str] = ("spot", "persistent", "trend")


def frozen_array(values: Iterable[float] | np.ndarray, *, dtype: type = float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class ScenarioKind(Enum):
    MANY_MANY = "ManyMany"
    ONE_MANY = "OneMany"
    ONE_ONE = "OneOne"
    ONE_NONE = "OneNone"

    @classmethod
    def parse(cls, value: "str | ScenarioKind") -> "ScenarioKind":
        if isinstance(value, ScenarioKind):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValidationError(f"Unknown scenario kind: {value!r}")


@dataclass(frozen=True, slots=True)
class UnitSeries:
    path: np.ndarray
    treated: bool
    unit_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "path", frozen_array(self.path))
        object.__setattr__(self, "treated", bool(self.treated))


@dataclass(frozen=True, slots=True)
class SeriesPanel:
    """Unit trajectories y_0..y_T sharing one intervention index ``t_c``."""

    units: Tuple[UnitSeries, ...]
    t_c: int
    horizon: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))
        self.validate()

    def validate(self) -> None:
        if not self.units:
            raise ValidationError("Panel needs at least one unit")
        if not 0 < self.t_c < self.horizon:
            raise ValidationError(f"Intervention index must satisfy 0 < t_c < T (t_c={self.t_c}, T={self.horizon})")
        for idx, unit in enumerate(self.units):
            if unit.path.shape != (self.horizon + 1,):
                raise ValidationError(
                    f"Unit {unit.unit_id or idx} has {unit.path.size} values; expected {self.horizon + 1}"
                )
            if not np.all(np.isfinite(unit.path)):
                raise ValidationError(f"Unit {unit.unit_id or idx} has non-finite values")

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def post_length(self) -> int:
        return self.horizon - self.t_c + 1

    def treated_units(self) -> Tuple[UnitSeries, ...]:
        return tuple(u for u in self.units if u.treated)

    def control_units(self) -> Tuple[UnitSeries, ...]:
        return tuple(u for u in self.units if not u.treated)

    def matrix(self) -> np.ndarray:
        """Outcomes as an (n_units, T+1) array."""
        return np.vstack([u.path for u in self.units])

    def treatment(self) -> np.ndarray:
        return np.array([u.treated for u in self.units], dtype=float)

    def kind(self) -> ScenarioKind:
        n_treated = len(self.treated_units())
        n_control = self.n_units - n_treated
        if n_treated == 0:
            raise SingleArm(f"panel of {self.n_units} units has no treated unit")
        if n_treated > 1:
            return ScenarioKind.MANY_MANY
        if n_control == 0:
            return ScenarioKind.ONE_NONE
        if n_control == 1:
            return ScenarioKind.ONE_ONE
        return ScenarioKind.ONE_MANY

    def focal_index(self) -> int:
        """Index of the first treated unit, or 0 when nothing is treated."""
        for idx, unit in enumerate(self.units):
            if unit.treated:
                return idx
        return 0

    def with_intervention(self, t_c: int) -> "SeriesPanel":
        return SeriesPanel(units=self.units, t_c=t_c, horizon=self.horizon)


def _critical_value(level: float, df: Optional[float]) -> float:
    q = 0.5 + level / 2
    return float(stats.norm.ppf(q) if df is None else stats.t.ppf(q, df))


@dataclass(frozen=True, slots=True)
class DatePath:
    """Effect estimate for h = 0..T−t_c with bounds at ``level``.

    Besides the stored bounds a path may keep what is needed to rebuild intervals at other
    levels: posterior ``samples`` (draws × horizons), ``std_error`` (normal, or Student-t when
    ``df`` is set), or absolute placebo ``deviations`` for symmetric permutation bands.
    """

    horizon_index: np.ndarray
    estimate: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    level: float = 0.95
    components: Optional[Dict[str, "DatePath"]] = None
    std_error: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = None
    deviations: Optional[np.ndarray] = None
    df: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "horizon_index", frozen_array(self.horizon_index, dtype=int))
        object.__setattr__(self, "estimate", frozen_array(self.estimate))
        n = self.estimate.size
        if self.horizon_index.size != n:
            raise ValidationError("horizon_index and estimate lengths differ")
        if (self.lower is None) != (self.upper is None):
            raise ValidationError("lower and upper bounds must be given together")
        if self.lower is not None:
            lower = frozen_array(self.lower)
            upper = frozen_array(self.upper)
            if lower.size != n or upper.size != n:
                raise ValidationError("bounds must match the estimate length")
            if np.any(lower > self.estimate + 1e-12) or np.any(upper < self.estimate - 1e-12):
                raise ValidationError("bounds must bracket the estimate pointwise")
            object.__setattr__(self, "lower", lower)
            object.__setattr__(self, "upper", upper)
        for name in ("std_error", "samples", "deviations"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, frozen_array(value))
        if self.components is not None:
            total = np.sum([self.components[c].estimate for c in COMPONENT_NAMES], axis=0)
            if not np.allclose(total, self.estimate, rtol=0.0, atol=1e-8):
                raise ValidationError("component paths do not sum to the estimate")

    @property
    def length(self) -> int:
        return int(self.estimate.size)

    @property
    def has_bounds(self) -> bool:
        return self.lower is not None

    def interval(self, level: float) -> Tuple[np.ndarray, np.ndarray]:
        """Central interval at ``level`` rebuilt from samples, standard errors or deviations."""
        if not 0.0 <= level < 1.0:
            raise ValidationError(f"level must be in [0, 1): {level}")
        if self.samples is not None:
            lo, hi = np.quantile(self.samples, [(1 - level) / 2, (1 + level) / 2], axis=0)
            return lo, hi
        if self.std_error is not None:
            z = _critical_value(level, self.df)
            return self.estimate - z * self.std_error, self.estimate + z * self.std_error
        if self.deviations is not None:
            half = np.quantile(self.deviations, level, axis=0)
            return self.estimate - half, self.estimate + half
        if self.has_bounds and np.isclose(level, self.level):
            return self.lower, self.upper
        raise MissingBounds("path carries no interval information")

    def cumulative(self) -> "DatePath":
        """Running sum of the effect; draws are summed per draw when available."""
        if self.samples is not None:
            draws = np.cumsum(self.samples, axis=1)
            return DatePath.from_samples(self.horizon_index, draws, level=self.level)
        return DatePath(horizon_index=self.horizon_index, estimate=np.cumsum(self.estimate), level=self.level)

    @classmethod
    def from_samples(
        cls,
        horizon_index: Sequence[int] | np.ndarray,
        draws: np.ndarray,
        *,
        level: float = 0.95,
        keep_samples: bool = True,
        components: Optional[Dict[str, "DatePath"]] = None,
    ) -> "DatePath":
        draws = np.atleast_2d(np.asarray(draws, dtype=float))
        estimate = draws.mean(axis=0)
        lo, hi = np.quantile(draws, [(1 - level) / 2, (1 + level) / 2], axis=0)
        return cls(
            horizon_index=horizon_index,
            estimate=estimate,
            lower=np.minimum(lo, estimate),
            upper=np.maximum(hi, estimate),
            level=level,
            components=components,
            samples=draws if keep_samples else None,
        )

    @classmethod
    def from_std_error(
        cls,
        horizon_index: Sequence[int] | np.ndarray,
        estimate: np.ndarray,
        std_error: np.ndarray,
        *,
        level: float = 0.95,
        df: Optional[float] = None,
    ) -> "DatePath":
        estimate = np.asarray(estimate, dtype=float)
        std_error = np.asarray(std_error, dtype=float)
        z = _critical_value(level, df)
        return cls(
            horizon_index=horizon_index,
            estimate=estimate,
            lower=estimate - z * std_error,
            upper=estimate + z * std_error,
            level=level,
            std_error=std_error,
            df=df,
        )


def horizon_range(panel: SeriesPanel) -> np.ndarray:
    return np.arange(panel.post_length)
