"""Intervention design matrix."""
from __future__ import annotations

import numpy as np
import pytest

from src.core.design import build_design, indicator_columns
from src.core.errors import ValidationError
from src.core.types import UnitSeries
from src.tests.conftest import make_panel


def test_indicator_columns_around_intervention() -> None:
    cols = indicator_columns(np.arange(6), t_c=3, treated=True)
    np.testing.assert_array_equal(cols[:, 0], [0, 0, 0, 1, 0, 0])
    np.testing.assert_array_equal(cols[:, 1], [0, 0, 0, 1, 1, 1])
    np.testing.assert_array_equal(cols[:, 2], [0, 0, 0, 1, 2, 3])


def test_untreated_indicators_are_zero() -> None:
    assert not indicator_columns(np.arange(6), t_c=3, treated=False).any()


def test_regressors_pair_lag_with_current_indicators() -> None:
    y = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    panel = make_panel([y], [1], 3)
    design = build_design(panel, panel.units[0])
    assert design.length == 5
    X = design.regressors()
    np.testing.assert_array_equal(X[:, 0], [0.0, 1.0, 2.0, 3.0, 4.0])
    # Row for y_3 (index 2) carries the spot indicator.
    np.testing.assert_array_equal(X[2], [2.0, 1.0, 1.0, 1.0])
    np.testing.assert_array_equal(X[4], [4.0, 0.0, 1.0, 3.0])
    assert design.rows().shape == (4, 5)


def test_build_design_rejects_foreign_unit() -> None:
    panel = make_panel([np.zeros(6)], [1], 3)
    with pytest.raises(ValidationError):
        build_design(panel, UnitSeries(np.zeros(4), True))
