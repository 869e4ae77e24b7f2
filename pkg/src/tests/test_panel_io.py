"""CSV readers and writers."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from src.core.errors import ParseError, ValidationError
from src.core.panel_io import (
    read_date_path_csv,
    read_panel_csv,
    write_date_path_csv,
    write_panel_csv,
)
from src.core.types import DatePath
from src.tests.conftest import make_panel


def test_panel_csv_with_sidecar(tmp_path: Path) -> None:
    panel = make_panel([[0.1, 0.2, 0.3, 0.4, 0.5], [1.0, 1.5, 2.0, 2.5, 3.0]], [1, 0], 2)
    target = write_panel_csv(panel, tmp_path / "panel.csv", sidecar={"scenario": {"t_c": 2}})
    header = target.read_text().splitlines()[0]
    assert header == "unit_id,treated,y_0,y_1,y_2,y_3,y_4"
    assert json.loads((tmp_path / "panel.json").read_text())["scenario"]["t_c"] == 2
    again = read_panel_csv(target)
    assert again.t_c == 2
    assert [u.treated for u in again.units] == [True, False]
    np.testing.assert_allclose(again.matrix(), panel.matrix())


def test_nan_cell_is_named(tmp_path: Path) -> None:
    path = tmp_path / "panel.csv"
    path.write_text("unit_id,treated,y_0,y_1,y_2,y_3\na,1,0.1,0.2,,0.4\n")
    with pytest.raises(ValidationError, match="row 1, column 'y_2'"):
        read_panel_csv(path, t_c=2)


def test_non_numeric_cell_coordinates(tmp_path: Path) -> None:
    path = tmp_path / "panel.csv"
    path.write_text("unit_id,treated,y_0,y_1,y_2,y_3\na,1,0.1,0.2,0.3,0.4\nb,0,0.1,abc,0.3,0.4\n")
    with pytest.raises(ParseError) as info:
        read_panel_csv(path, t_c=2)
    assert info.value.row == 2
    assert info.value.column == "y_1"


def test_empty_file_and_missing_sidecar(tmp_path: Path) -> None:
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ParseError):
        read_panel_csv(empty, t_c=2)
    good = tmp_path / "nosidecar.csv"
    good.write_text("unit_id,treated,y_0,y_1,y_2,y_3\na,1,0.1,0.2,0.3,0.4\n")
    with pytest.raises(ValidationError):
        read_panel_csv(good)
    with pytest.raises(FileNotFoundError):
        read_panel_csv(tmp_path / "absent.csv", t_c=2)


def test_invalid_treated_flag(tmp_path: Path) -> None:
    path = tmp_path / "panel.csv"
    path.write_text("unit_id,treated,y_0,y_1,y_2,y_3\na,2,0.1,0.2,0.3,0.4\n")
    with pytest.raises(ParseError) as info:
        read_panel_csv(path, t_c=2)
    assert info.value.column == "treated"


def test_date_path_csv(tmp_path: Path) -> None:
    path = DatePath.from_std_error([0, 1, 2], [0.5, 0.25, 0.125], [0.1, 0.1, 0.1])
    target = write_date_path_csv(path, tmp_path / "date.csv")
    assert target.read_text().splitlines()[0] == "h,estimate,lower,upper"
    again = read_date_path_csv(target)
    np.testing.assert_allclose(again.estimate, path.estimate)
    np.testing.assert_allclose(again.upper, path.upper, rtol=1e-10)
