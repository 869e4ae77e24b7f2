"""CSV readers and writers for panels and effect paths."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.core.errors import ParseError, ValidationError
from src.core.types import COMPONENT_NAMES, DatePath, SeriesPanel, UnitSeries

PANEL_ID_COLUMNS = ("unit_id", "treated")
FLOAT_FORMAT = "%.12g"


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def frame_to_csv_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def panel_to_frame(panel: SeriesPanel) -> pd.DataFrame:
    columns = [f"y_{t}" for t in range(panel.horizon + 1)]
    frame = pd.DataFrame(panel.matrix(), columns=columns)
    frame.insert(0, "treated", [int(u.treated) for u in panel.units])
    frame.insert(0, "unit_id", [u.unit_id or f"u{i}" for i, u in enumerate(panel.units)])
    return frame


def write_panel_csv(panel: SeriesPanel, path: Path, *, sidecar: Optional[Dict[str, Any]] = None) -> Path:
    atomic_write_text(path, frame_to_csv_text(panel_to_frame(panel)))
    if sidecar is not None:
        atomic_write_text(path.with_suffix(".json"), json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def _outcome_columns(frame: pd.DataFrame) -> list[str]:
    outcome = [c for c in frame.columns if c not in PANEL_ID_COLUMNS]
    expected = [f"y_{t}" for t in range(len(outcome))]
    if outcome != expected:
        raise ParseError("outcome columns must be y_0..y_T in order", column=next(
            (c for c, e in zip(outcome, expected) if c != e), None))
    return outcome


def frame_to_panel(frame: pd.DataFrame, t_c: int) -> SeriesPanel:
    """Validate a wide frame cell by cell and build the panel; rows are 1-based data rows."""
    if frame.empty:
        raise ParseError("panel file has no data rows")
    for column in PANEL_ID_COLUMNS:
        if column not in frame.columns:
            raise ParseError("missing required column", column=column)
    outcome = _outcome_columns(frame)
    if len(outcome) < 3:
        raise ParseError("panel needs at least three time points")
    values = frame[outcome].apply(pd.to_numeric, errors="coerce")
    bad = values.isna() & frame[outcome].notna()
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        raise ParseError(f"non-numeric value {frame[outcome].iat[row, col]!r}", row=int(row) + 1, column=outcome[col])
    finite = np.isfinite(values.to_numpy(dtype=float))
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise ValidationError(f"missing or non-finite value at row {int(row) + 1}, column {outcome[col]!r}")
    treated = pd.to_numeric(frame["treated"], errors="coerce")
    invalid = ~treated.isin([0, 1])
    if invalid.any():
        row = int(np.flatnonzero(invalid.to_numpy())[0])
        raise ParseError("treated must be 0 or 1", row=row + 1, column="treated")
    units = tuple(
        UnitSeries(path=values.iloc[i].to_numpy(dtype=float), treated=bool(treated.iat[i]), unit_id=str(frame["unit_id"].iat[i]))
        for i in range(len(frame))
    )
    return SeriesPanel(units=units, t_c=int(t_c), horizon=len(outcome) - 1)


def read_csv_frame(path: Path, **kwargs: Any) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, na_values=["", "nan", "NaN", "NA"], **kwargs)
    except pd.errors.EmptyDataError as exc:
        raise ParseError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise ParseError(f"{path} has ragged rows: {exc}") from exc


def read_panel_csv(path: Path, t_c: Optional[int] = None) -> SeriesPanel:
    """Read a wide panel; ``t_c`` falls back to the JSON sidecar written by ``simulate``."""
    if t_c is None:
        sidecar = path.with_suffix(".json")
        if not sidecar.exists():
            raise ValidationError(f"no intervention index given and no sidecar next to {path}")
        t_c = int(json.loads(sidecar.read_text())["scenario"]["t_c"])
    return frame_to_panel(read_csv_frame(path), t_c)


def date_path_to_frame(path: DatePath) -> pd.DataFrame:
    data: Dict[str, Any] = {"h": path.horizon_index, "estimate": path.estimate}
    if path.has_bounds:
        data["lower"] = path.lower
        data["upper"] = path.upper
    else:
        data["lower"] = np.full(path.length, np.nan)
        data["upper"] = np.full(path.length, np.nan)
    if path.components is not None:
        for name in COMPONENT_NAMES:
            data[name] = path.components[name].estimate
    return pd.DataFrame(data)


def write_date_path_csv(path: DatePath, target: Path) -> Path:
    atomic_write_text(target, frame_to_csv_text(date_path_to_frame(path)))
    return target


def read_date_path_csv(source: Path, *, level: float = 0.95) -> DatePath:
    frame = pd.read_csv(source)
    for column in ("h", "estimate", "lower", "upper"):
        if column not in frame.columns:
            raise ParseError("missing required column", column=column)
    bounded = frame["lower"].notna().all() and frame["upper"].notna().all()
    return DatePath(
        horizon_index=frame["h"].to_numpy(dtype=int),
        estimate=frame["estimate"].to_numpy(dtype=float),
        lower=frame["lower"].to_numpy(dtype=float) if bounded else None,
        upper=frame["upper"].to_numpy(dtype=float) if bounded else None,
        level=level,
    )


def decomposition_to_frame(components: Dict[str, DatePath]) -> pd.DataFrame:
    first = components[COMPONENT_NAMES[0]]
    data: Dict[str, Any] = {"h": first.horizon_index}
    for name in COMPONENT_NAMES:
        comp = components[name]
        data[name] = comp.estimate
        data[f"{name}_lower"] = comp.lower
        data[f"{name}_upper"] = comp.upper
    return pd.DataFrame(data)
