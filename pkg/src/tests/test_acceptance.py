"""Monte Carlo acceptance checks on the simulation grid (run with DATEKIT_SLOW=1)."""
from __future__ import annotations

import os

import numpy as np
import pytest
from scipy import stats

from src.core.config_loader import RunSettings
from src.core.scenario import ScenarioConfig, true_date_oracle
from src.dgp.simulate import simulate_scenario
from src.eval.table import build_table
from src.tools.runner import load_results, run_scenario

pytestmark = pytest.mark.slow

WORKERS = int(os.environ.get("DATEKIT_THREADS", "4"))


def _settings() -> RunSettings:
    settings = RunSettings()
    settings.dlm.draws = 1000
    return settings


@pytest.fixture(scope="module")
def grid_results(tmp_path_factory: pytest.TempPathFactory):
    root = tmp_path_factory.mktemp("grid")
    settings = _settings()
    runs = [
        (ScenarioConfig.preset("ManyMany", 72, replications=200, seed=11), ["panel-mean"]),
        (ScenarioConfig.preset("OneNone", 72, replications=200, seed=12), ["dlm", "lm", "arimax"]),
        (ScenarioConfig.preset("OneOne", 72, replications=200, seed=13), ["dlm", "lm", "arimax"]),
    ]
    dirs = []
    for cfg, methods in runs:
        out = root / f"{cfg.kind.value}_T{cfg.T}"
        run_scenario(cfg, methods, out, settings, WORKERS)
        dirs.append(out)
    return build_table(load_results(dirs))


def test_arm_differences_match_the_oracle() -> None:
    cfg = ScenarioConfig.preset("ManyMany", 72, ar_coef=0.8, n_treated=10_000, n_control=10_000, replications=1, seed=5)
    panel = simulate_scenario(cfg, 0).panel
    Y = panel.matrix()
    z = panel.treatment().astype(bool)
    treated, control = Y[z], Y[~z]
    diff = treated.mean(axis=0) - control.mean(axis=0)
    se = np.sqrt(treated.var(axis=0, ddof=1) / z.sum() + control.var(axis=0, ddof=1) / (~z).sum())
    truth = true_date_oracle(cfg).estimate
    post = slice(cfg.t_c, None)
    assert np.all(np.abs(diff[post] - truth) < 3 * se[post])
    assert truth[0] == pytest.approx(0.47)
    assert stats.ks_2samp(treated[:, cfg.t_c - 1], control[:, cfg.t_c - 1]).pvalue > 0.01


def test_many_many_panel_mean_coverage(grid_results) -> None:
    row = grid_results.row("ManyMany", 72, "panel-mean")
    assert 0.92 <= row.cp_95 <= 0.97
    assert row.mse_standardized == pytest.approx(1.0)


@pytest.mark.parametrize("scenario", ["OneNone", "OneOne"])
def test_dlm_beats_regression_baselines(grid_results, scenario: str) -> None:
    dlm = grid_results.row(scenario, 72, "dlm")
    lm = grid_results.row(scenario, 72, "lm")
    arimax = grid_results.row(scenario, 72, "arimax")
    assert dlm.mse_raw < lm.mse_raw
    assert dlm.mse_raw < arimax.mse_raw
    assert 0.92 <= dlm.cp_95 <= 0.99
    assert lm.cp_95 >= 0.97


def test_dlm_quantile_curve_is_calibrated(grid_results) -> None:
    curve = grid_results.row("OneNone", 72, "dlm").quantile_coverage
    for q in (0.25, 0.5, 0.75):
        assert abs(curve[q] - q) <= 0.05
