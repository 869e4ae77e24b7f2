"""Command-line entry point: ``python -m src.tools.cli <subcommand>``.

Subcommands
  simulate      write one simulated replication as a panel CSV plus JSON sidecar
  estimate      run one method on a panel file and write its effect path
  run-scenario  Monte Carlo replications for one scenario, sharded and resumable
  placebo       placebo intervention test on a panel file
  report        summary table, quantile coverage and per-horizon metrics from run directories
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

PROJECT_ROOT = Path(__file__).resolve().parents[2]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.core.config_loader import ConfigLoader, RunSettings
from src.core.errors import DatekitError, ValidationError
from src.core.logging_setup import configure_cli_logging, get_logger
from src.core.panel_io import (
    atomic_write_text,
    date_path_to_frame,
    decomposition_to_frame,
    frame_to_csv_text,
    write_date_path_csv,
    write_panel_csv,
)
from src.core.scenario import ScenarioConfig
from src.dgp.simulate import simulate_scenario
from src.eval.table import REFERENCE_CELL, build_table
from src.tools.ingest import ingest_csv
from src.tools.methods import METHODS, estimate
from src.tools.placebo import PLACEBO_RULES, placebo_test
from src.tools.runner import load_results, run_scenario

logger = get_logger("tools.cli", Path("logs"))

SCENARIO_FLAGS = (
    "kind",
    "T",
    "t_c",
    "ar_coef",
    "b1",
    "b2",
    "b3",
    "vol_discount",
    "sigma2_0",
    "n_treated",
    "n_control",
    "replications",
    "seed",
    "y_0",
    "assignment",
    "propensity_slope",
)


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("scenario (flags override --scenario)")
    group.add_argument("--scenario", type=Path, help="Scenario JSON file")
    group.add_argument("--kind", help="ManyMany, OneMany, OneOne or OneNone")
    group.add_argument("--T", dest="T", type=int)
    group.add_argument("--t-c", dest="t_c", type=int)
    group.add_argument("--ar-coef", dest="ar_coef", type=float)
    group.add_argument("--b1", type=float)
    group.add_argument("--b2", type=float)
    group.add_argument("--b3", type=float)
    group.add_argument("--vol-discount", dest="vol_discount", type=float)
    group.add_argument("--sigma2-0", dest="sigma2_0", type=float)
    group.add_argument("--n-treated", dest="n_treated", type=int)
    group.add_argument("--n-control", dest="n_control", type=int)
    group.add_argument("--replications", type=int)
    group.add_argument("--seed", type=int)
    group.add_argument("--y-0", dest="y_0", type=float)
    group.add_argument("--assignment", choices=["design", "confounded"])
    group.add_argument("--propensity-slope", dest="propensity_slope", type=float)


def scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    """File first, then a preset for the requested kind/T, then explicit flags."""
    overrides = {name: getattr(args, name, None) for name in SCENARIO_FLAGS}
    if args.scenario is not None:
        cfg = ScenarioConfig.load(args.scenario)
        return cfg.override(**overrides)
    if overrides["kind"] is None:
        raise ValidationError("give --scenario or at least --kind")
    base = ScenarioConfig.preset(overrides.pop("kind"), overrides.pop("T") or 72)
    return base.override(**overrides)


def _load_panel(args: argparse.Namespace):
    return ingest_csv(args.panel, args.t_c if args.t_c is not None else _sidecar_t_c(args.panel), args.treated, layout=args.layout)


def _sidecar_t_c(path: Path) -> int:
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise ValidationError(f"--t-c is required: no sidecar next to {path}")
    return int(json.loads(sidecar.read_text())["scenario"]["t_c"])


def _add_panel_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--panel", type=Path, required=True, help="Panel or series CSV")
    parser.add_argument("--t-c", dest="t_c", help="Intervention row index or date label (default: sidecar)")
    parser.add_argument("--treated", help="Comma-separated treated unit ids or value columns")
    parser.add_argument("--layout", choices=["auto", "wide", "long"], default="auto")
    parser.add_argument("--method", choices=METHODS, default="dlm")
    parser.add_argument("--draws", type=int, help="Posterior draws for dlm")


def cmd_simulate(args: argparse.Namespace, settings: RunSettings) -> int:
    cfg = scenario_from_args(args)
    sim = simulate_scenario(cfg, args.rep)
    sidecar = {
        "scenario": cfg.to_dict(),
        "rep": args.rep,
        "rep_seed": sim.rep_seed,
        "truth": sim.truth.estimate.tolist(),
        "propensity": sim.propensity.tolist() if sim.propensity is not None else None,
    }
    path = write_panel_csv(sim.panel, args.out, sidecar=sidecar)
    print(f"Wrote {path} ({sim.panel.n_units} units, T={cfg.T}, t_c={cfg.t_c})")
    return 0


def cmd_estimate(args: argparse.Namespace, settings: RunSettings) -> int:
    panel = _load_panel(args)
    if args.contrast:
        settings.dlm.contrast = args.contrast
    if args.grid:
        settings.dlm.grid = tuple(float(v) for v in args.grid.split(","))
    stabilized = None if args.stabilized is None else args.stabilized == "yes"
    result = estimate(
        args.method,
        panel,
        settings,
        seed=args.seed,
        stabilized=stabilized,
        propensity=args.propensity,
        draws=args.draws,
        keep_samples=False,
    )
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_date_path_csv(result.date, out / "date.csv")
    if args.cumulative:
        write_date_path_csv(result.date.cumulative(), out / "cumulative.csv")
    if result.dlm is not None:
        paths = date_path_to_frame(result.dlm.treated)[["h", "estimate", "lower", "upper"]]
        control = date_path_to_frame(result.dlm.control)
        paths = paths.rename(columns={"estimate": "treated", "lower": "treated_lower", "upper": "treated_upper"})
        paths["control"] = control["estimate"]
        paths["control_lower"] = control["lower"]
        paths["control_upper"] = control["upper"]
        atomic_write_text(out / "paths.csv", frame_to_csv_text(paths))
        atomic_write_text(out / "decomposition.csv", frame_to_csv_text(decomposition_to_frame(result.dlm.components)))
    if result.info:
        atomic_write_text(out / "info.json", json.dumps(result.info, indent=2, sort_keys=True))
    print(f"{args.method}: DATE(0)={result.date.estimate[0]:.4f}, written to {out}")
    return 0


def cmd_run_scenario(args: argparse.Namespace, settings: RunSettings) -> int:
    cfg = scenario_from_args(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    out = args.out or settings.output / f"{cfg.kind.value}_T{cfg.T}"
    manifest = run_scenario(cfg, methods, out, settings, args.workers, command=list(sys.argv))
    print(f"{cfg.replications} replications of {cfg.kind.value} T={cfg.T} in {out} ({len(manifest.outputs)} files)")
    return 0


def cmd_placebo(args: argparse.Namespace, settings: RunSettings) -> int:
    panel = _load_panel(args)
    if args.margin is not None:
        settings.runner.placebo_margin = args.margin
    times = [int(t) for t in args.times.split(",")] if args.times else None
    report = placebo_test(
        panel,
        args.method,
        args.rule,
        args.reps,
        args.seed,
        settings,
        times=times,
        draws=args.draws,
        workers=args.workers,
    )
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "placebo_paths.csv", frame_to_csv_text(report.to_frame()))
    atomic_write_text(out / "placebo_horizon.csv", frame_to_csv_text(report.horizon_frame()))
    if report.trajectories:
        atomic_write_text(out / "placebo_trajectories.csv", frame_to_csv_text(report.trajectory_frame()))
    atomic_write_text(out / "placebo_summary.json", json.dumps(report.summary(), indent=2, sort_keys=True))
    summary = report.summary()
    print(f"Placebo {args.method}: {summary['runs_at_90pct']:.0%} of runs contain 0 at >= 90% of horizons")
    return 0


def _reference(text: Optional[str]):
    if not text:
        return REFERENCE_CELL
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError("--reference must look like ManyMany:72:panel-mean")
    return parts[0], int(parts[1]), parts[2]


def cmd_report(args: argparse.Namespace, settings: RunSettings) -> int:
    results = load_results(args.results)
    table = build_table(results, _reference(args.reference))
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "table1.csv", frame_to_csv_text(table.to_frame()))
    atomic_write_text(out / "quantile_coverage.csv", frame_to_csv_text(table.quantile_frame()))
    atomic_write_text(out / "per_horizon.csv", frame_to_csv_text(table.horizon))
    with pd.option_context("display.width", 120):
        print(table.to_frame()[["scenario", "T", "method", "mse_standardized", "cp_95", "failure_rate"]].to_string(index=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datekit", description="Dynamic average treatment effect estimation")
    parser.add_argument("--settings", type=Path, default=PROJECT_ROOT / "config" / "datekit.yaml")
    parser.add_argument("--logging", type=Path, default=PROJECT_ROOT / "config" / "logging.yaml")
    parser.add_argument("--log-level", help="Override the configured log level")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Simulate one replication to CSV")
    _add_scenario_flags(sim)
    sim.add_argument("--rep", type=int, default=0, help="Replication index")
    sim.add_argument("--out", type=Path, required=True)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="Estimate the effect path on a panel")
    _add_panel_flags(est)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--stabilized", choices=["yes", "no"])
    est.add_argument("--propensity", choices=["logistic", "known"])
    est.add_argument("--contrast", choices=["simulate-forward", "smoothed-states"])
    est.add_argument("--grid", help="Comma-separated discount values")
    est.add_argument("--cumulative", action="store_true", help="Also write the cumulative effect")
    est.add_argument("--out", type=Path, required=True, help="Output directory")
    est.set_defaults(func=cmd_estimate)

    run = sub.add_parser("run-scenario", help="Monte Carlo replications for one scenario")
    _add_scenario_flags(run)
    run.add_argument("--methods", required=True, help="Comma-separated method names")
    run.add_argument("--workers", type=int)
    run.add_argument("--out", type=Path)
    run.set_defaults(func=cmd_run_scenario)

    plc = sub.add_parser("placebo", help="Placebo intervention test")
    _add_panel_flags(plc)
    plc.add_argument("--rule", choices=PLACEBO_RULES, default="uniform")
    plc.add_argument("--times", help="Comma-separated placebo times for --rule fixed")
    plc.add_argument("--reps", type=int, default=100)
    plc.add_argument("--seed", type=int, default=0)
    plc.add_argument("--margin", type=int)
    plc.add_argument("--workers", type=int)
    plc.add_argument("--out", type=Path, required=True)
    plc.set_defaults(func=cmd_placebo)

    rep = sub.add_parser("report", help="Summaries from one or more run directories")
    rep.add_argument("--results", type=Path, nargs="+", required=True)
    rep.add_argument("--reference", help="scenario:T:method of the MSE reference cell")
    rep.add_argument("--out", type=Path, required=True)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = ConfigLoader(args.settings).load() if args.settings.exists() else RunSettings()
        if args.logging.exists():
            configure_cli_logging(args.logging, level=args.log_level or settings.logs.level)
        return int(args.func(args, settings))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DatekitError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
