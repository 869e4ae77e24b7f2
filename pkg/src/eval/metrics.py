"""Point and interval accuracy of effect paths against the analytic truth."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from statsmodels.stats.proportion import proportion_confint

from src.core.config_loader import DEFAULT_QUANTILES
from src.core.errors import LengthMismatch, MissingBounds, ValidationError
from src.core.types import DatePath


def _aligned(date_hat: DatePath, truth: DatePath) -> None:
    if date_hat.length != truth.length:
        raise LengthMismatch(f"estimate has {date_hat.length} horizons, truth has {truth.length}")


def mse(date_hat: DatePath, truth: DatePath) -> float:
    _aligned(date_hat, truth)
    err = date_hat.estimate - truth.estimate
    return float(np.mean(err * err))


def _bounds(date_hat: DatePath, level: Optional[float]) -> tuple[np.ndarray, np.ndarray]:
    if level is None or (date_hat.has_bounds and np.isclose(level, date_hat.level)):
        if not date_hat.has_bounds:
            raise MissingBounds("estimate reports no interval")
        return date_hat.lower, date_hat.upper
    return date_hat.interval(level)


def coverage_flags(date_hat: DatePath, truth: DatePath, level: Optional[float] = None) -> np.ndarray:
    """Closed-interval hits per horizon."""
    _aligned(date_hat, truth)
    lower, upper = _bounds(date_hat, level)
    return (lower <= truth.estimate) & (truth.estimate <= upper)


def coverage(date_hat: DatePath, truth: DatePath, level: Optional[float] = None) -> float:
    return float(np.mean(coverage_flags(date_hat, truth, level)))


@dataclass(frozen=True, slots=True)
class QuantileCurve:
    levels: np.ndarray
    coverage: np.ndarray
    lower_band: np.ndarray
    upper_band: np.ndarray
    hits: np.ndarray
    trials: np.ndarray

    def as_dict(self) -> Dict[float, float]:
        return {float(q): float(c) for q, c in zip(self.levels, self.coverage)}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "nominal": self.levels,
                "coverage": self.coverage,
                "band_lower": self.lower_band,
                "band_upper": self.upper_band,
                "hits": self.hits,
                "trials": self.trials,
            }
        )


def curve_from_counts(levels: Sequence[float], hits: Sequence[int], trials: Sequence[int]) -> QuantileCurve:
    """Empirical coverage with Wilson 95% bands from pooled hit counts."""
    hits_arr = np.asarray(hits, dtype=int)
    trials_arr = np.asarray(trials, dtype=int)
    if np.any(trials_arr <= 0):
        raise ValidationError("every nominal level needs at least one trial")
    lo, hi = proportion_confint(hits_arr, trials_arr, alpha=0.05, method="wilson")
    return QuantileCurve(
        levels=np.asarray(levels, dtype=float),
        coverage=hits_arr / trials_arr,
        lower_band=np.asarray(lo, dtype=float),
        upper_band=np.asarray(hi, dtype=float),
        hits=hits_arr,
        trials=trials_arr,
    )


def quantile_coverage_curve(
    replications: Sequence[DatePath],
    truth: DatePath | Sequence[DatePath],
    levels: Sequence[float] = DEFAULT_QUANTILES,
) -> QuantileCurve:
    """Coverage of central intervals at each nominal level, pooled over horizons and replications."""
    if not replications:
        raise ValidationError("quantile coverage needs at least one replication")
    truths = [truth] * len(replications) if isinstance(truth, DatePath) else list(truth)
    if len(truths) != len(replications):
        raise LengthMismatch("one truth path per replication is required")
    hits = np.zeros(len(levels), dtype=int)
    trials = np.zeros(len(levels), dtype=int)
    for date_hat, true_path in zip(replications, truths):
        _aligned(date_hat, true_path)
        for i, q in enumerate(levels):
            lower, upper = date_hat.interval(float(q))
            hits[i] += int(np.sum((lower <= true_path.estimate) & (true_path.estimate <= upper)))
            trials[i] += date_hat.length
    return curve_from_counts(levels, hits, trials)


def per_horizon(
    replications: Sequence[DatePath],
    truth: DatePath,
    level: Optional[float] = None,
) -> pd.DataFrame:
    """MSE and coverage at each horizon across replications; coverage is NaN without bounds."""
    if not replications:
        raise ValidationError("per-horizon metrics need at least one replication")
    errors = []
    covers = []
    for date_hat in replications:
        _aligned(date_hat, truth)
        errors.append((date_hat.estimate - truth.estimate) ** 2)
        try:
            covers.append(coverage_flags(date_hat, truth, level).astype(float))
        except MissingBounds:
            covers.append(np.full(truth.length, np.nan))
    return pd.DataFrame(
        {
            "h": truth.horizon_index,
            "mse": np.mean(errors, axis=0),
            "cp": np.mean(covers, axis=0),
        }
    )
