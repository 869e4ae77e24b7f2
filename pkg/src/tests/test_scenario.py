"""Scenario configuration and the analytic effect path."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from src.core.errors import ValidationError
from src.core.scenario import ScenarioConfig, true_date_oracle
from src.core.types import ScenarioKind


def test_oracle_closed_form_values() -> None:
    cfg = ScenarioConfig(T=200, t_c=20, ar_coef=0.8, b1=0.01, b2=0.5, b3=-0.03)
    truth = true_date_oracle(cfg)
    assert truth.estimate[0] == pytest.approx(0.47, abs=1e-12)
    assert truth.estimate[-1] == pytest.approx(-0.20, abs=1e-9)
    np.testing.assert_array_equal(truth.lower, truth.estimate)
    np.testing.assert_array_equal(truth.std_error, np.zeros(truth.length))
    assert truth.length == cfg.T - cfg.t_c + 1


def test_oracle_from_explicit_initial_value() -> None:
    cfg = ScenarioConfig(T=10, t_c=3, ar_coef=0.5, b1=0.0, b2=1.0, b3=0.0, y_0=2.0)
    # Pre mean at t_c−1 = 2·0.5² = 0.5; control 0.25, treated 1.5.
    assert true_date_oracle(cfg).estimate[0] == pytest.approx(1.25)


def test_preset_grid() -> None:
    cfg = ScenarioConfig.preset("ManyMany", 120)
    assert cfg.kind is ScenarioKind.MANY_MANY
    assert (cfg.n_treated, cfg.n_control) == (100, 100)
    assert cfg.t_c == 60
    assert cfg.ar_coef == 0.8
    assert ScenarioConfig.preset("OneNone", 72).ar_coef == 0.75
    assert ScenarioConfig.preset("OneMany", 240, seed=3).seed == 3


def test_validation_rejects_inconsistent_counts() -> None:
    with pytest.raises(ValidationError):
        ScenarioConfig(kind="OneOne", n_treated=1, n_control=0)
    with pytest.raises(ValidationError):
        ScenarioConfig(ar_coef=1.0)
    with pytest.raises(ValidationError):
        ScenarioConfig(T=10, t_c=10)
    with pytest.raises(ValidationError):
        ScenarioConfig(assignment="confounded")


def test_json_round_trip_and_unknown_keys(tmp_path: Path) -> None:
    cfg = ScenarioConfig.preset("OneOne", 72, seed=9, replications=4)
    path = tmp_path / "scenario.json"
    path.write_text(cfg.to_json())
    assert ScenarioConfig.load(path) == cfg
    with pytest.raises(ValidationError):
        ScenarioConfig.from_dict({**cfg.to_dict(), "sigma": 1.0})
    with pytest.raises(ValidationError):
        ScenarioConfig.from_json("{not json")
    with pytest.raises(FileNotFoundError):
        ScenarioConfig.load(tmp_path / "missing.json")


def test_override_ignores_unset_flags() -> None:
    cfg = ScenarioConfig.preset("OneNone", 72)
    assert cfg.override(seed=None) is cfg
    assert cfg.override(seed=5).seed == 5
