"""Shared fixtures; Monte Carlo checks marked ``slow`` only run with DATEKIT_SLOW=1."""
from __future__ import annotations

import os
from typing import Sequence

import numpy as np
import pytest

from src.core.types import SeriesPanel, UnitSeries


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: long Monte Carlo checks (set DATEKIT_SLOW=1)")


def pytest_collection_modifyitems(config: pytest.Config, items: list) -> None:
    if os.environ.get("DATEKIT_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set DATEKIT_SLOW=1 to run Monte Carlo checks")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def make_panel(paths: Sequence[Sequence[float]], treated: Sequence[bool], t_c: int) -> SeriesPanel:
    units = tuple(
        UnitSeries(path=np.asarray(p, dtype=float), treated=bool(z), unit_id=f"u{i}")
        for i, (p, z) in enumerate(zip(paths, treated))
    )
    return SeriesPanel(units=units, t_c=t_c, horizon=len(paths[0]) - 1)


@pytest.fixture
def ar_series() -> np.ndarray:
    """A noisy AR(1) path of length 61 with a level shift after t = 30."""
    rng = np.random.default_rng(2024)
    y = np.empty(61)
    y[0] = 0.05
    for t in range(1, 61):
        shift = 0.5 if t == 30 else 0.0
        y[t] = (y[t - 1] if t == 30 else 0.8 * y[t - 1] + 0.01) + shift + 0.1 * rng.standard_normal()
    return y
