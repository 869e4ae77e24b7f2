"""Smoke tests for the config loader."""
from __future__ import annotations

from pathlib import Path

import pytest

from src.core.config_loader import DEFAULT_GRID, DEFAULT_QUANTILES, ConfigLoader, RunSettings, load_config


def test_config_loader_roundtrip(tmp_path: Path) -> None:
    config_path = tmp_path / "config" / "datekit.yaml"
    config_path.parent.mkdir()
    config_path.write_text("""
output: ${PROJECT_ROOT}/out
dlm:
  draws: 200
  grid: [0.9, 0.99]
  contrast: smoothed-states
dipw:
  stabilized: false
  propensity: known
runner:
  workers: 3
""")
    loader = ConfigLoader(config_path)
    cfg = loader.load()
    assert cfg.output.resolve() == (tmp_path / "out").resolve()
    assert cfg.dlm.draws == 200
    assert cfg.dlm.grid == (0.9, 0.99)
    assert cfg.dlm.contrast == "smoothed-states"
    assert cfg.dlm.n0 == 20.0
    assert cfg.dipw.stabilized is False
    assert cfg.dipw.propensity == "known"
    assert cfg.eval.quantiles == DEFAULT_QUANTILES
    assert cfg.runner.workers == 3
    assert cfg.runner.placebo_margin == 10


def test_config_loader_missing(tmp_path: Path) -> None:
    loader = ConfigLoader(tmp_path / "missing.yaml")
    with pytest.raises(FileNotFoundError):
        loader.load()


def test_env_default_expansion(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    path = tmp_path / "settings.yaml"
    path.write_text("output: ${DATEKIT_TEST_OUT:-fallback}\n")
    monkeypatch.delenv("DATEKIT_TEST_OUT", raising=False)
    assert load_config(path)["output"] == "fallback"
    monkeypatch.setenv("DATEKIT_TEST_OUT", "chosen")
    assert load_config(path)["output"] == "chosen"


def test_repository_settings_file_loads() -> None:
    path = Path(__file__).resolve().parents[2] / "config" / "datekit.yaml"
    cfg = ConfigLoader(path).load()
    assert cfg.dlm.grid == DEFAULT_GRID
    assert cfg.dlm.draws == 5000
    assert cfg.eval.level == 0.95


def test_thread_cap(monkeypatch: pytest.MonkeyPatch) -> None:
    settings = RunSettings()
    settings.runner.workers = 8
    monkeypatch.setenv("DATEKIT_THREADS", "2")
    assert settings.effective_workers() == 2
    assert settings.effective_workers(1) == 1
    monkeypatch.delenv("DATEKIT_THREADS")
    assert settings.effective_workers() == 8
