"""Read empirical CSV files into panels.

Two layouts are accepted:

* wide: the panel format written by ``simulate`` (``unit_id,treated,y_0..y_T``);
* long: one row per time point, an optional leading date column and one numeric column per
  unit, e.g. ``date,unemployment``. The treated column spec names the treated columns;
  without one the first value column is treated and the rest are controls.

Values are used as given. Any transformation (rates, logs, differences) is up to the caller.
"""
from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.errors import ParseError, ValidationError
from src.core.logging_setup import get_logger
from src.core.panel_io import PANEL_ID_COLUMNS, frame_to_panel, read_csv_frame
from src.core.types import SeriesPanel, UnitSeries

logger = get_logger("tools.ingest", Path("logs"))

DATE_COLUMNS = ("date", "month", "time", "period")
LAYOUTS = ("auto", "wide", "long")


def _treated_names(spec: Optional[str | Sequence[str]]) -> Optional[List[str]]:
    if spec is None:
        return None
    if isinstance(spec, str):
        return [s.strip() for s in spec.split(",") if s.strip()]
    return [str(s) for s in spec]


def resolve_t_c(t_c: int | str, dates: Optional[pd.Series]) -> int:
    """Row index of the intervention; a date label is looked up in the date column."""
    if isinstance(t_c, (int, np.integer)):
        return int(t_c)
    text = str(t_c).strip()
    if dates is not None:
        matches = np.flatnonzero(dates.astype(str).str.strip().to_numpy() == text)
        if matches.size:
            return int(matches[0])
    try:
        return int(text)
    except ValueError as exc:
        raise ValidationError(f"intervention {t_c!r} is neither a row index nor a date in the file") from exc


def _wide(frame: pd.DataFrame, t_c: int | str, treated: Optional[List[str]]) -> SeriesPanel:
    if treated is not None:
        frame = frame.copy()
        unknown = sorted(set(treated) - set(frame["unit_id"]))
        if unknown:
            raise ValidationError(f"treated units not in file: {', '.join(unknown)}")
        frame["treated"] = frame["unit_id"].isin(treated).astype(int).astype(str)
    return frame_to_panel(frame, resolve_t_c(t_c, None))


def _long(frame: pd.DataFrame, t_c: int | str, treated: Optional[List[str]]) -> SeriesPanel:
    dates: Optional[pd.Series] = None
    columns = list(frame.columns)
    if columns and str(columns[0]).strip().lower() in DATE_COLUMNS:
        dates = frame[columns[0]]
        columns = columns[1:]
    if not columns:
        raise ParseError("file has no value columns")
    if len(frame) < 3:
        raise ParseError("series needs at least three time points")

    raw = frame[columns]
    values = raw.apply(pd.to_numeric, errors="coerce")
    bad = (values.isna() & raw.notna()).to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ParseError(f"non-numeric value {raw.iat[row, col]!r}", row=int(row) + 1, column=str(columns[col]))
    finite = np.isfinite(values.to_numpy(dtype=float))
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise ValidationError(f"missing or non-finite value at row {int(row) + 1}, column {columns[col]!r}")

    treated = treated if treated is not None else [str(columns[0])]
    unknown = sorted(set(treated) - {str(c) for c in columns})
    if unknown:
        raise ValidationError(f"treated columns not in file: {', '.join(unknown)}")
    units = tuple(
        UnitSeries(path=values[c].to_numpy(dtype=float), treated=str(c) in treated, unit_id=str(c)) for c in columns
    )
    # Treated units first so the focal series is the first treated column.
    units = tuple(sorted(units, key=lambda u: not u.treated))
    return SeriesPanel(units=units, t_c=resolve_t_c(t_c, dates), horizon=len(frame) - 1)


def ingest_csv(
    path: Path,
    t_c: int | str,
    treated_column_spec: Optional[str | Sequence[str]] = None,
    *,
    layout: str = "auto",
) -> SeriesPanel:
    if layout not in LAYOUTS:
        raise ValidationError(f"layout must be one of {', '.join(LAYOUTS)}")
    frame = read_csv_frame(Path(path))
    if frame.empty:
        raise ParseError(f"{path} has no data rows")
    if layout == "auto":
        layout = "wide" if all(c in frame.columns for c in PANEL_ID_COLUMNS) else "long"
    treated = _treated_names(treated_column_spec)
    panel = _wide(frame, t_c, treated) if layout == "wide" else _long(frame, t_c, treated)
    logger.info(
        "Ingested %s (%s layout): %s units, T=%s, t_c=%s, kind=%s",
        path,
        layout,
        panel.n_units,
        panel.horizon,
        panel.t_c,
        panel.kind().value if panel.treated_units() else "control-only",
    )
    return panel
