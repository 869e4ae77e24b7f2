"""Scenario × method summary with MSE standardised to a reference cell."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.core.errors import MissingReference, ValidationError
from src.core.logging_setup import get_logger
from src.eval.metrics import QuantileCurve, curve_from_counts

logger = get_logger("eval.table", Path("logs"))

CellKey = Tuple[str, int, str]
REFERENCE_CELL: CellKey = ("ManyMany", 72, "panel-mean")
RESULT_COLUMNS = (
    "scenario",
    "T",
    "method",
    "rep",
    "h",
    "estimate",
    "lower",
    "upper",
    "truth",
    "sq_error",
    "covered",
    "status",
    "error",
)


def quantile_column(q: float) -> str:
    return f"q_{q:.2f}"


def quantile_levels(frame: pd.DataFrame) -> List[float]:
    return sorted(float(c[2:]) for c in frame.columns if c.startswith("q_"))


@dataclass(slots=True)
class MetricRow:
    scenario: str
    T: int  # noqa: N815
    method: str
    mse_raw: float
    mse_standardized: float
    cp_95: Optional[float]
    quantile_curve: Optional[QuantileCurve] = None
    replications: int = 0
    failed: int = 0

    @property
    def quantile_coverage(self) -> Dict[float, float]:
        return self.quantile_curve.as_dict() if self.quantile_curve is not None else {}

    @property
    def failure_rate(self) -> float:
        return self.failed / self.replications if self.replications else 0.0


@dataclass(slots=True)
class MetricTable:
    rows: List[MetricRow]
    reference: CellKey
    horizon: pd.DataFrame

    def row(self, scenario: str, T: int, method: str) -> MetricRow:  # noqa: N803
        for r in self.rows:
            if (r.scenario, r.T, r.method) == (scenario, T, method):
                return r
        raise KeyError((scenario, T, method))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "scenario": r.scenario,
                    "T": r.T,
                    "method": r.method,
                    "mse_raw": r.mse_raw,
                    "mse_standardized": r.mse_standardized,
                    "cp_95": r.cp_95,
                    "replications": r.replications,
                    "failed": r.failed,
                    "failure_rate": r.failure_rate,
                }
                for r in self.rows
            ]
        )

    def quantile_frame(self) -> pd.DataFrame:
        frames = []
        for r in self.rows:
            if r.quantile_curve is None:
                continue
            frame = r.quantile_curve.to_frame()
            frame.insert(0, "method", r.method)
            frame.insert(0, "T", r.T)
            frame.insert(0, "scenario", r.scenario)
            frames.append(frame)
        if not frames:
            return pd.DataFrame(columns=["scenario", "T", "method", "nominal", "coverage", "band_lower", "band_upper", "hits", "trials"])
        return pd.concat(frames, ignore_index=True)


def _quantile_curve(ok: pd.DataFrame, levels: List[float]) -> Optional[QuantileCurve]:
    hits, trials, kept = [], [], []
    for q in levels:
        column = ok[quantile_column(q)].dropna()
        if column.empty:
            continue
        hits.append(int(column.sum()))
        trials.append(int(column.size))
        kept.append(q)
    if not kept:
        return None
    return curve_from_counts(kept, hits, trials)


def per_horizon_frame(results: pd.DataFrame) -> pd.DataFrame:
    ok = results[results["status"] == "ok"]
    grouped = ok.groupby(["scenario", "T", "method", "h"], sort=True)
    frame = grouped.agg(mse=("sq_error", "mean"), cp=("covered", "mean"), replications=("rep", "nunique"))
    return frame.reset_index()


def build_table(results: pd.DataFrame, reference: CellKey = REFERENCE_CELL) -> MetricTable:
    """Aggregate long per-(replication, method, horizon) rows into one row per cell."""
    missing = [c for c in RESULT_COLUMNS if c not in results.columns]
    if missing:
        raise ValidationError(f"results are missing columns: {', '.join(missing)}")
    results = results.copy()
    results["T"] = results["T"].astype(int)
    levels = quantile_levels(results)

    rows: List[MetricRow] = []
    for (scenario, T, method), cell in results.groupby(["scenario", "T", "method"], sort=True):
        ok = cell[cell["status"] == "ok"]
        reps = int(cell["rep"].nunique())
        failed = int(cell.loc[cell["status"] != "ok", "rep"].nunique())
        mse_raw = float(ok.groupby("rep")["sq_error"].mean().mean()) if not ok.empty else float("nan")
        covered = ok["covered"].dropna()
        cp = float(covered.mean()) if not covered.empty else None
        if failed:
            logger.info("Cell %s/%s/%s: %s of %s replications failed", scenario, T, method, failed, reps)
        rows.append(
            MetricRow(
                scenario=str(scenario),
                T=int(T),
                method=str(method),
                mse_raw=mse_raw,
                mse_standardized=float("nan"),
                cp_95=cp,
                quantile_curve=_quantile_curve(ok, levels),
                replications=reps,
                failed=failed,
            )
        )

    ref = next((r for r in rows if (r.scenario, r.T, r.method) == tuple(reference)), None)
    if ref is None or not np.isfinite(ref.mse_raw):
        raise MissingReference(f"reference cell {reference} is absent from the results")
    for r in rows:
        r.mse_standardized = r.mse_raw / ref.mse_raw if ref.mse_raw > 0 else float("nan")
    return MetricTable(rows=rows, reference=tuple(reference), horizon=per_horizon_frame(results))
