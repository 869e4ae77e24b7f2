"""Command-line subcommands end to end on small inputs."""
from __future__ import annotations

import json
from pathlib import Path

import pandas as pd
import pytest

from src.tools.cli import main


@pytest.fixture
def quiet(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> list:
    monkeypatch.delenv("DATEKIT_THREADS", raising=False)
    return ["--logging", str(tmp_path / "no-logging.yaml")]


def _simulate(tmp_path: Path, quiet: list, kind: str = "OneNone") -> Path:
    out = tmp_path / "panel.csv"
    assert main(quiet + ["simulate", "--kind", kind, "--T", "72", "--seed", "4", "--out", str(out)]) == 0
    return out


def test_simulate_writes_panel_and_sidecar(tmp_path: Path, quiet: list) -> None:
    out = _simulate(tmp_path, quiet)
    frame = pd.read_csv(out)
    assert list(frame.columns[:3]) == ["unit_id", "treated", "y_0"]
    assert frame.shape == (1, 2 + 73)
    sidecar = json.loads(out.with_suffix(".json").read_text())
    assert sidecar["scenario"]["t_c"] == 36
    assert len(sidecar["truth"]) == 72 - 36 + 1


def test_estimate_baseline_uses_sidecar_intervention(tmp_path: Path, quiet: list) -> None:
    panel = _simulate(tmp_path, quiet)
    out = tmp_path / "lm"
    assert main(quiet + ["estimate", "--panel", str(panel), "--method", "lm", "--cumulative", "--out", str(out)]) == 0
    date = pd.read_csv(out / "date.csv")
    assert len(date) == 37
    assert {"h", "estimate", "lower", "upper"} <= set(date.columns)
    assert (out / "cumulative.csv").exists()
    assert not (out / "paths.csv").exists()


def test_estimate_dlm_writes_paths_and_decomposition(tmp_path: Path, quiet: list) -> None:
    panel = _simulate(tmp_path, quiet)
    out = tmp_path / "dlm"
    argv = ["estimate", "--panel", str(panel), "--method", "dlm", "--draws", "200", "--grid", "0.99", "--out", str(out)]
    assert main(quiet + argv) == 0
    paths = pd.read_csv(out / "paths.csv")
    assert {"treated", "control", "control_lower", "control_upper"} <= set(paths.columns)
    assert (out / "decomposition.csv").exists()
    info = json.loads((out / "info.json").read_text())
    assert info == {"delta": "0.99", "beta_v": "0.99"}


def test_run_scenario_then_report(tmp_path: Path, quiet: list) -> None:
    run_dir = tmp_path / "run"
    argv = [
        "run-scenario",
        "--kind", "ManyMany",
        "--n-treated", "6",
        "--n-control", "6",
        "--replications", "2",
        "--methods", "panel-mean,dipw",
        "--workers", "1",
        "--out", str(run_dir),
    ]
    assert main(quiet + argv) == 0
    assert (run_dir / "results.csv").exists()
    report = tmp_path / "report"
    assert main(quiet + ["report", "--results", str(run_dir), "--out", str(report)]) == 0
    table = pd.read_csv(report / "table1.csv")
    reference = table[table["method"] == "panel-mean"].iloc[0]
    assert reference["mse_standardized"] == pytest.approx(1.0)
    assert (report / "quantile_coverage.csv").exists()
    assert (report / "per_horizon.csv").exists()


def test_placebo_subcommand(tmp_path: Path, quiet: list) -> None:
    panel = _simulate(tmp_path, quiet)
    out = tmp_path / "placebo"
    argv = ["placebo", "--panel", str(panel), "--method", "lm", "--rule", "fixed", "--times", "12,20", "--out", str(out)]
    assert main(quiet + argv) == 0
    summary = json.loads((out / "placebo_summary.json").read_text())
    assert summary["runs"] == 2
    assert (out / "placebo_paths.csv").exists()


def test_exit_codes(tmp_path: Path, quiet: list, capsys: pytest.CaptureFixture) -> None:
    missing = ["estimate", "--panel", str(tmp_path / "missing.csv"), "--t-c", "5", "--out", str(tmp_path / "x")]
    assert main(quiet + missing) == 1
    assert main(quiet + ["run-scenario", "--kind", "OneNone", "--methods", "dipw", "--out", str(tmp_path / "r")]) == 2
    assert "IncompatibleMethod" in capsys.readouterr().err
    assert main(quiet + ["simulate", "--out", str(tmp_path / "p.csv")]) == 2
    assert main(quiet + ["report", "--results", str(tmp_path), "--out", str(tmp_path / "o")]) == 1


def _control_only_csv(tmp_path: Path, quiet: list) -> Path:
    frame = pd.read_csv(_simulate(tmp_path, quiet, kind="OneOne"))
    out = tmp_path / "controls.csv"
    frame[frame["treated"] == 0].to_csv(out, index=False)
    return out


def test_control_only_panel_is_rejected_by_estimate(tmp_path: Path, quiet: list, capsys: pytest.CaptureFixture) -> None:
    panel = _control_only_csv(tmp_path, quiet)
    argv = ["estimate", "--panel", str(panel), "--t-c", "36", "--method", "did", "--out", str(tmp_path / "did")]
    assert main(quiet + argv) == 2
    assert "SingleArm" in capsys.readouterr().err


def test_placebo_on_control_only_panel_writes_trajectories(tmp_path: Path, quiet: list) -> None:
    panel = _control_only_csv(tmp_path, quiet)
    out = tmp_path / "placebo"
    argv = [
        "placebo",
        "--panel", str(panel),
        "--t-c", "36",
        "--method", "dlm",
        "--draws", "200",
        "--rule", "fixed",
        "--times", "12,20",
        "--out", str(out),
    ]
    assert main(quiet + argv) == 0
    trajectories = pd.read_csv(out / "placebo_trajectories.csv")
    assert len(trajectories) == 24 + 16
    assert {"treated", "control", "control_lower", "control_upper"} <= set(trajectories.columns)
