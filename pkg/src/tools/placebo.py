"""Placebo intervention test: pretend the intervention happened earlier and look for an effect."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.core.config_loader import RunSettings
from src.core.errors import InsufficientPreHistory, MissingBounds, ValidationError
from src.core.logging_setup import get_logger
from src.core.types import DatePath, SeriesPanel, UnitSeries
from src.dgp.streams import StreamRole, replication_seed, unit_stream
from src.tools.methods import estimate

logger = get_logger("tools.placebo", Path("logs"))

PLACEBO_RULES = ("uniform", "fixed")
TRAJECTORY_COLUMNS = (
    "run",
    "placebo_t_c",
    "h",
    "treated",
    "treated_lower",
    "treated_upper",
    "control",
    "control_lower",
    "control_upper",
)


@dataclass(frozen=True, slots=True)
class PlaceboReport:
    method: str
    true_t_c: int
    placebo_times: np.ndarray
    paths: List[DatePath]
    trajectories: List[Tuple[DatePath, DatePath]] = field(default_factory=list)

    def contains_zero(self) -> List[np.ndarray]:
        return [(p.lower <= 0.0) & (0.0 <= p.upper) for p in self.paths]

    @property
    def run_zero_share(self) -> np.ndarray:
        """Fraction of horizons whose interval contains 0, one value per placebo run."""
        return np.array([float(np.mean(hits)) for hits in self.contains_zero()])

    @property
    def horizon_zero_share(self) -> np.ndarray:
        """Fraction of runs containing 0 at each horizon, over the runs that reach it."""
        longest = max(p.length for p in self.paths)
        hits = np.zeros(longest)
        reach = np.zeros(longest)
        for flags in self.contains_zero():
            hits[: flags.size] += flags
            reach[: flags.size] += 1
        return hits / reach

    @property
    def max_abs_mean(self) -> np.ndarray:
        return np.array([float(np.max(np.abs(p.estimate))) for p in self.paths])

    def summary(self) -> dict:
        return {
            "method": self.method,
            "true_t_c": self.true_t_c,
            "runs": len(self.paths),
            "mean_zero_share": float(self.run_zero_share.mean()),
            "runs_at_90pct": float(np.mean(self.run_zero_share >= 0.9)),
            "max_abs_mean": float(self.max_abs_mean.max()),
        }

    def to_frame(self) -> pd.DataFrame:
        frames = []
        for run, (t_p, path) in enumerate(zip(self.placebo_times, self.paths)):
            frames.append(
                pd.DataFrame(
                    {
                        "run": run,
                        "placebo_t_c": int(t_p),
                        "h": path.horizon_index,
                        "estimate": path.estimate,
                        "lower": path.lower,
                        "upper": path.upper,
                        "contains_zero": ((path.lower <= 0.0) & (0.0 <= path.upper)).astype(int),
                    }
                )
            )
        return pd.concat(frames, ignore_index=True)

    def horizon_frame(self) -> pd.DataFrame:
        share = self.horizon_zero_share
        return pd.DataFrame({"h": np.arange(share.size), "zero_share": share})

    def trajectory_frame(self) -> pd.DataFrame:
        """Treated and counterfactual mean paths per run; empty for methods without them."""
        frames = []
        for run, (t_p, (treated, control)) in enumerate(zip(self.placebo_times, self.trajectories)):
            frames.append(
                pd.DataFrame(
                    {
                        "run": run,
                        "placebo_t_c": int(t_p),
                        "h": treated.horizon_index,
                        "treated": treated.estimate,
                        "treated_lower": treated.lower,
                        "treated_upper": treated.upper,
                        "control": control.estimate,
                        "control_lower": control.lower,
                        "control_upper": control.upper,
                    }
                )
            )
        if not frames:
            return pd.DataFrame(columns=list(TRAJECTORY_COLUMNS))
        return pd.concat(frames, ignore_index=True)


def pre_intervention_panel(panel: SeriesPanel) -> SeriesPanel:
    """Keep y_0..y_{t_c−1} and mark the focal series treated from the placebo time on.

    The placebo intervention must see no genuinely treated data. A control-only panel gets
    its first series as the placebo-treated unit.
    """
    cut = panel.t_c
    focal = panel.focal_index()
    units = tuple(
        UnitSeries(path=u.path[:cut], treated=u.treated or idx == focal, unit_id=u.unit_id)
        for idx, u in enumerate(panel.units)
    )
    return SeriesPanel(units=units, t_c=max(1, cut // 2), horizon=cut - 1)


def check_placebo_time(t_p: int, true_t_c: int, margin: int) -> None:
    if t_p >= true_t_c:
        raise InsufficientPreHistory(f"placebo time {t_p} must precede the intervention at {true_t_c}")
    if t_p < margin:
        raise InsufficientPreHistory(f"placebo time {t_p} leaves fewer than {margin} pre-placebo points")
    if t_p > true_t_c - margin:
        raise InsufficientPreHistory(f"placebo time {t_p} leaves fewer than {margin} post-placebo points")


def draw_placebo_times(true_t_c: int, reps: int, seed: int, margin: int = 10) -> np.ndarray:
    """Uniform integer draws on [margin, t_c − margin] from the placebo stream."""
    if true_t_c - margin < margin:
        raise InsufficientPreHistory(f"t_c={true_t_c} is too early for a placebo margin of {margin}")
    rng = unit_stream(seed, 0, 0, StreamRole.PLACEBO)
    return rng.integers(margin, true_t_c - margin + 1, size=reps)


def _placebo_run(
    truncated: SeriesPanel,
    method: str,
    t_p: int,
    settings: RunSettings,
    seed: int,
    draws: Optional[int],
) -> Tuple[DatePath, Optional[Tuple[DatePath, DatePath]]]:
    result = estimate(method, truncated.with_intervention(int(t_p)), settings, seed=seed, draws=draws, keep_samples=False)
    if not result.date.has_bounds:
        raise MissingBounds(f"{method} reports no interval; placebo test needs one")
    if result.dlm is None:
        return result.date, None
    return result.date, (result.dlm.treated, result.dlm.control)


def placebo_test(
    panel: SeriesPanel,
    method: str = "dlm",
    rule: str = "uniform",
    reps: int = 100,
    seed: int = 0,
    settings: Optional[RunSettings] = None,
    *,
    times: Optional[Sequence[int]] = None,
    draws: Optional[int] = None,
    workers: Optional[int] = None,
) -> PlaceboReport:
    """Re-estimate on pre-intervention data with placebo intervention times.

    ``rule="uniform"`` draws ``reps`` times from the placebo stream; ``rule="fixed"`` uses
    ``times`` as given. Each run rebuilds the intervention design at its placebo time.
    """
    settings = settings or RunSettings()
    margin = settings.runner.placebo_margin
    if rule not in PLACEBO_RULES:
        raise ValidationError(f"Unknown placebo rule {rule!r}; choose from {', '.join(PLACEBO_RULES)}")
    if rule == "fixed":
        if not times:
            raise ValidationError("fixed placebo rule needs explicit times")
        placebo_times = np.asarray(times, dtype=int)
    else:
        placebo_times = draw_placebo_times(panel.t_c, reps, seed, margin)
    for t_p in placebo_times:
        check_placebo_time(int(t_p), panel.t_c, margin)

    truncated = pre_intervention_panel(panel)
    logger.info("Placebo test for %s: %s runs, times in [%s, %s]", method, placebo_times.size, placebo_times.min(), placebo_times.max())
    n_jobs = settings.effective_workers(workers)
    tasks = (
        delayed(_placebo_run)(truncated, method, int(t_p), settings, replication_seed(seed, run), draws)
        for run, t_p in enumerate(placebo_times)
    )
    runs = list(Parallel(n_jobs=n_jobs)(tasks))
    trajectories = [pair for _, pair in runs if pair is not None]
    report = PlaceboReport(
        method=method,
        true_t_c=panel.t_c,
        placebo_times=placebo_times,
        paths=[date for date, _ in runs],
        trajectories=trajectories if len(trajectories) == len(runs) else [],
    )
    logger.info("Placebo summary: %s", report.summary())
    return report
