"""Branching at the intervention and the effect decomposition."""
from __future__ import annotations

import numpy as np
import pytest

from src.core.errors import ValidationError
from src.core.scenario import ScenarioConfig, true_date_oracle
from src.core.types import COMPONENT_NAMES
from src.dgp.simulate import simulate_scenario
from src.dlm.counterfactual import (
    branch_counterfactual,
    branch_draws,
    branch_paths,
    coefficient_paths,
    decompose_effects,
    estimate_dlm,
    fit_dlm,
)
from src.dlm.model import ContrastMode, DlmPosterior, DlmSpec
from src.eval.metrics import coverage, quantile_coverage_curve
from src.tests.conftest import make_panel


def _constant_posterior(T: int, state: np.ndarray, draws: int = 3) -> DlmPosterior:
    states = np.broadcast_to(state, (draws, T, state.size)).copy()
    return DlmPosterior(states=states, variances=np.ones((draws, T)), chosen_discounts=(0.99, 0.99), log_predictive=0.0)


@pytest.mark.parametrize("form, lag", [("lag", 0.0), ("increment", -1.0)])
def test_spot_only_effect_vanishes_after_intervention(form: str, lag: float) -> None:
    panel = make_panel([np.linspace(0.0, 1.0, 11)], [1], 5)
    spec = DlmSpec.default(intercept=False, form=form)
    post = _constant_posterior(10, np.array([lag, 0.5, 0.0, 0.0]))
    draws = branch_draws(post, panel, spec, ContrastMode.SMOOTHED_STATES)
    np.testing.assert_allclose(draws.effect[:, 0], 0.5)
    np.testing.assert_allclose(draws.effect[:, 1:], 0.0, atol=1e-12)


def test_persistent_and_trend_paths_under_ar_lag() -> None:
    panel = make_panel([np.zeros(11)], [1], 5)
    spec = DlmSpec.default(intercept=False)
    post = _constant_posterior(10, np.array([0.5, 0.0, 0.2, 0.1]))
    draws = branch_draws(post, panel, spec, "smoothed-states")
    expected = []
    prev = 0.0
    for h in range(panel.post_length):
        prev = 0.5 * prev + 0.2 + 0.1 * (h + 1)
        expected.append(prev)
    np.testing.assert_allclose(draws.effect[0], expected)
    np.testing.assert_allclose(draws.components["trend"][0, 0], 0.1)


def test_mean_paths_start_from_last_pre_intervention_value() -> None:
    y = np.linspace(1.0, 2.0, 11)
    panel = make_panel([y], [1], 5)
    spec = DlmSpec.default(intercept=True)
    post = _constant_posterior(10, np.array([0.1, 0.9, 0.0, 0.0, 0.0]))
    draws = branch_draws(post, panel, spec, "smoothed-states")
    assert draws.control[0, 0] == pytest.approx(0.1 + 0.9 * y[4])
    np.testing.assert_allclose(draws.treated, draws.control)


def test_posterior_length_must_match_panel() -> None:
    panel = make_panel([np.zeros(11)], [1], 5)
    post = _constant_posterior(8, np.zeros(4))
    with pytest.raises(ValidationError):
        coefficient_paths(post, panel, DlmSpec.default(intercept=False), "smoothed-states")


def test_components_sum_to_total_for_every_draw(ar_series: np.ndarray) -> None:
    panel = make_panel([ar_series], [1], 30)
    spec = DlmSpec.default()
    post = fit_dlm(panel, spec, draws=200, seed=3)
    fitted = spec.with_discounts(*post.chosen_discounts)
    for mode in ContrastMode:
        draws = branch_draws(post, panel, fitted, mode)
        total = sum(draws.components[name] for name in COMPONENT_NAMES)
        np.testing.assert_allclose(total, draws.effect, rtol=0.0, atol=1e-8)


def test_contrast_modes_agree_at_the_intervention(ar_series: np.ndarray) -> None:
    panel = make_panel([ar_series], [1], 30)
    spec = DlmSpec.default()
    post = fit_dlm(panel, spec, draws=100, seed=1)
    fitted = spec.with_discounts(*post.chosen_discounts)
    forward = coefficient_paths(post, panel, fitted, ContrastMode.SIMULATE_FORWARD)
    smoothed = coefficient_paths(post, panel, fitted, ContrastMode.SMOOTHED_STATES)
    assert forward.shape == smoothed.shape == (100, panel.post_length, spec.state_dim)
    np.testing.assert_array_equal(forward[:, 0], smoothed[:, 0])


def test_estimate_is_reproducible_and_summarised(ar_series: np.ndarray) -> None:
    panel = make_panel([ar_series], [1], 30)
    first = estimate_dlm(panel, draws=300, seed=9)
    second = estimate_dlm(panel, draws=300, seed=9)
    np.testing.assert_array_equal(first.date.estimate, second.date.estimate)
    assert first.date.length == panel.post_length
    assert first.date.samples.shape == (300, panel.post_length)
    assert set(first.components) == set(COMPONENT_NAMES)
    assert np.all(first.date.lower <= first.date.estimate)
    np.testing.assert_allclose(first.treated.estimate - first.control.estimate, first.date.estimate, atol=1e-10)
    assert first.posterior.chosen_discounts[0] in (0.95, 0.99, 0.999)
    # The level shift of 0.5 at the intervention should be visible.
    assert first.date.estimate[0] > 0.2


def test_branch_paths_share_draws(ar_series: np.ndarray) -> None:
    panel = make_panel([ar_series], [1], 30)
    spec = DlmSpec.default()
    post = fit_dlm(panel, spec, draws=50, seed=2)
    treated, control = branch_paths(post, panel, spec.with_discounts(*post.chosen_discounts), "smoothed-states")
    assert treated.length == control.length == panel.post_length
    assert treated.samples is None


def test_branching_entry_points_share_the_keyed_stream(ar_series: np.ndarray) -> None:
    panel = make_panel([ar_series], [1], 30)
    fit = estimate_dlm(panel, draws=150, seed=4)
    spec = DlmSpec.default().with_discounts(*fit.posterior.chosen_discounts)
    date = branch_counterfactual(fit.posterior, panel, spec)
    np.testing.assert_array_equal(date.estimate, fit.date.estimate)
    parts = decompose_effects(fit.posterior, panel, spec)
    assert set(parts) == set(COMPONENT_NAMES)
    for name in COMPONENT_NAMES:
        np.testing.assert_array_equal(parts[name].estimate, fit.components[name].estimate)


def test_forward_branch_is_static_without_evolution(ar_series: np.ndarray) -> None:
    panel = make_panel([ar_series], [1], 30)
    post = fit_dlm(panel, DlmSpec.default(), draws=80, seed=6, grid=[(1.0, 0.99)])
    spec = DlmSpec.default().with_discounts(*post.chosen_discounts)
    forward = coefficient_paths(post, panel, spec, ContrastMode.SIMULATE_FORWARD)
    start = post.states[:, panel.t_c - 1]
    for k in range(panel.post_length):
        np.testing.assert_array_equal(forward[:, k], start)


def test_forward_branch_width_tracks_the_smoothed_states() -> None:
    panel = simulate_scenario(ScenarioConfig.preset("OneNone", 72, seed=5), 0).panel
    spec = DlmSpec.default()
    post = fit_dlm(panel, spec, draws=400, seed=5, grid=(0.99,))
    fitted = spec.with_discounts(*post.chosen_discounts)
    forward = branch_counterfactual(post, panel, fitted, ContrastMode.SIMULATE_FORWARD, keep_samples=False)
    smoothed = branch_counterfactual(post, panel, fitted, ContrastMode.SMOOTHED_STATES, keep_samples=False)
    forward_width = forward.upper - forward.lower
    smoothed_width = smoothed.upper - smoothed.lower
    assert np.all(np.isfinite(forward_width))
    assert np.median(forward_width / smoothed_width) <= 1.6
    assert forward_width.max() <= 3.0 * smoothed_width.max()


def test_default_branch_is_calibrated_on_simulated_series() -> None:
    cfg = ScenarioConfig.preset("OneNone", 72, seed=404)
    truth = true_date_oracle(cfg)
    paths = [estimate_dlm(simulate_scenario(cfg, rep).panel, draws=300, seed=rep).date for rep in range(30)]
    assert 0.88 <= np.mean([coverage(p, truth) for p in paths]) <= 0.995
    curve = quantile_coverage_curve(paths, truth, levels=(0.25, 0.5, 0.75)).as_dict()
    for level, observed in curve.items():
        assert abs(observed - level) <= 0.15


@pytest.mark.slow
def test_one_none_arch_is_tracked_inside_the_band() -> None:
    cfg = ScenarioConfig.preset("OneNone", 120, ar_coef=0.8, seed=505)
    truth = true_date_oracle(cfg)
    assert truth.estimate[0] == pytest.approx(0.47)
    shares = [coverage(estimate_dlm(simulate_scenario(cfg, rep).panel, draws=1000, seed=rep).date, truth) for rep in range(10)]
    assert np.mean(shares) >= 0.9
