"""Placebo intervention test on pre-intervention data."""
from __future__ import annotations

import numpy as np
import pytest

from src.core.config_loader import RunSettings
from src.core.design import build_design
from src.core.errors import InsufficientPreHistory, MissingBounds, ValidationError
from src.core.scenario import ScenarioConfig
from src.core.types import ScenarioKind, SeriesPanel
from src.dgp.simulate import simulate_scenario
from src.tools.placebo import (
    TRAJECTORY_COLUMNS,
    check_placebo_time,
    draw_placebo_times,
    placebo_test,
    pre_intervention_panel,
)


@pytest.fixture
def one_none_panel():
    return simulate_scenario(ScenarioConfig.preset("OneNone", 72, seed=21), 0).panel


def _control_only_panel(seed: int = 23) -> SeriesPanel:
    panel = simulate_scenario(ScenarioConfig.preset("OneOne", 72, seed=seed), 0).panel
    control = panel.control_units()[0]
    return SeriesPanel(units=(control,), t_c=panel.t_c, horizon=panel.horizon)


def test_placebo_time_must_leave_room_on_both_sides() -> None:
    check_placebo_time(10, 36, 10)
    check_placebo_time(26, 36, 10)
    for bad in (36, 40, 9, 27):
        with pytest.raises(InsufficientPreHistory):
            check_placebo_time(bad, 36, 10)


def test_draws_are_keyed_and_inside_the_margin() -> None:
    times = draw_placebo_times(36, 200, seed=5)
    np.testing.assert_array_equal(times, draw_placebo_times(36, 200, seed=5))
    assert times.min() >= 10 and times.max() <= 26
    assert not np.array_equal(times, draw_placebo_times(36, 200, seed=6))
    with pytest.raises(InsufficientPreHistory):
        draw_placebo_times(15, 10, seed=0)


def test_truncation_drops_treated_observations(one_none_panel) -> None:
    truncated = pre_intervention_panel(one_none_panel)
    assert truncated.horizon == one_none_panel.t_c - 1
    np.testing.assert_array_equal(truncated.matrix(), one_none_panel.matrix()[:, : one_none_panel.t_c])
    assert truncated.kind() is ScenarioKind.ONE_NONE


def test_control_only_series_is_treated_from_the_placebo_time() -> None:
    truncated = pre_intervention_panel(_control_only_panel())
    assert truncated.units[0].treated
    assert truncated.kind() is ScenarioKind.ONE_NONE
    design = build_design(truncated.with_intervention(12), truncated.units[0])
    assert design.regressors()[:, 1:].any()


def test_fixed_placebo_report_shapes(one_none_panel) -> None:
    report = placebo_test(one_none_panel, "lm", "fixed", times=[12, 20], workers=1)
    assert [p.length for p in report.paths] == [36 - 12, 36 - 20]
    assert report.horizon_zero_share.shape == (24,)
    assert report.run_zero_share.shape == (2,)
    summary = report.summary()
    assert summary["runs"] == 2 and summary["true_t_c"] == 36
    assert set(summary) == {"method", "true_t_c", "runs", "mean_zero_share", "runs_at_90pct", "max_abs_mean"}
    frame = report.to_frame()
    assert len(frame) == 24 + 16
    assert set(frame["placebo_t_c"]) == {12, 20}
    assert report.horizon_frame()["zero_share"].between(0, 1).all()


def test_uniform_rule_is_reproducible(one_none_panel) -> None:
    first = placebo_test(one_none_panel, "lm", reps=4, seed=3, workers=1)
    second = placebo_test(one_none_panel, "lm", reps=4, seed=3, workers=1)
    np.testing.assert_array_equal(first.placebo_times, second.placebo_times)
    for a, b in zip(first.paths, second.paths):
        np.testing.assert_array_equal(a.estimate, b.estimate)


def test_placebo_rejects_bad_requests(one_none_panel) -> None:
    with pytest.raises(ValidationError):
        placebo_test(one_none_panel, "lm", "fixed")
    with pytest.raises(ValidationError):
        placebo_test(one_none_panel, "lm", "random")
    with pytest.raises(InsufficientPreHistory):
        placebo_test(one_none_panel, "lm", "fixed", times=[36])
    settings = RunSettings()
    settings.runner.placebo_margin = 20
    with pytest.raises(InsufficientPreHistory):
        placebo_test(one_none_panel, "lm", reps=2, settings=settings)


def test_methods_without_bounds_cannot_be_placebo_tested() -> None:
    cfg = ScenarioConfig.preset("OneMany", 72, n_control=3, seed=2)
    panel = simulate_scenario(cfg, 0).panel
    with pytest.raises(MissingBounds):
        placebo_test(panel, "y", "fixed", times=[20], workers=1)


@pytest.mark.slow
def test_dlm_placebo_intervals_contain_zero() -> None:
    panel = simulate_scenario(ScenarioConfig.preset("OneNone", 120, seed=31), 0).panel
    report = placebo_test(panel, "dlm", reps=100, seed=1, draws=1000)
    assert report.summary()["runs_at_90pct"] >= 0.9


@pytest.mark.parametrize("method", ["lm", "dlm"])
def test_control_only_series_gets_data_scaled_bands(method: str) -> None:
    panel = _control_only_panel()
    report = placebo_test(panel, method, "fixed", times=[12, 20], draws=300, workers=1)
    pre = panel.matrix()[0, : panel.t_c]
    spread = float(pre.max() - pre.min())
    for path in report.paths:
        width = path.upper - path.lower
        assert np.all(np.isfinite(width))
        assert np.all(width > 0.0)
        assert np.median(width) < 3.0 * spread


def test_dlm_placebo_keeps_branch_trajectories(one_none_panel) -> None:
    report = placebo_test(one_none_panel, "dlm", "fixed", times=[12, 20], draws=200, workers=1)
    assert len(report.trajectories) == 2
    for path, (treated, control) in zip(report.paths, report.trajectories):
        assert treated.length == control.length == path.length
        np.testing.assert_allclose(treated.estimate - control.estimate, path.estimate, atol=1e-10)
    frame = report.trajectory_frame()
    assert tuple(frame.columns) == TRAJECTORY_COLUMNS
    assert len(frame) == 24 + 16
    assert (frame["treated_lower"] <= frame["treated"]).all()
    assert (frame["control"] <= frame["control_upper"]).all()


def test_regression_placebo_has_no_trajectories(one_none_panel) -> None:
    report = placebo_test(one_none_panel, "lm", "fixed", times=[12], workers=1)
    assert report.trajectories == []
    frame = report.trajectory_frame()
    assert frame.empty
    assert tuple(frame.columns) == TRAJECTORY_COLUMNS
