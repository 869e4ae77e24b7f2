"""Monte Carlo replication runner.

Every replication is simulated, estimated with each requested method and scored against
the analytic oracle, then written as its own shard ``reps/rep_XXXXX.csv``. Shards are
produced by a bounded joblib pool; the parent process is the only writer of the manifest
and of the merged ``results.csv``. Re-running into an existing directory recomputes only
the shards whose checksum no longer matches the manifest.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.core.config_loader import RunSettings
from src.core.errors import DatekitError, MissingBounds
from src.core.logging_setup import get_logger
from src.core.panel_io import atomic_write_text, frame_to_csv_text
from src.core.scenario import ScenarioConfig, true_date_oracle
from src.core.types import DatePath
from src.dgp.simulate import simulate_scenario
from src.eval.table import RESULT_COLUMNS, quantile_column
from src.tools.manifest import RunManifest, text_checksum
from src.tools.methods import estimate, require_compatible

logger = get_logger("tools.runner", Path("logs"))

SHARD_DIR = "reps"
RESULTS_NAME = "results.csv"
SCENARIO_NAME = "scenario.json"


def shard_name(rep: int) -> str:
    return f"{SHARD_DIR}/rep_{rep:05d}.csv"


def config_hash(cfg: ScenarioConfig, methods: Sequence[str], settings: RunSettings) -> str:
    """Digest of everything that changes result bytes; worker counts and paths are excluded."""
    payload = {
        "scenario": cfg.to_dict(),
        "methods": list(methods),
        "dlm": asdict(settings.dlm),
        "dipw": asdict(settings.dipw),
        "eval": asdict(settings.eval),
    }
    return text_checksum(json.dumps(payload, sort_keys=True, default=str))


def _interval_hits(date: DatePath, truth: np.ndarray, level: float) -> np.ndarray:
    try:
        lower, upper = date.interval(level)
    except MissingBounds:
        return np.full(truth.size, np.nan)
    return ((lower <= truth) & (truth <= upper)).astype(float)


def score_rows(
    cfg: ScenarioConfig,
    method: str,
    rep: int,
    date: Optional[DatePath],
    truth: np.ndarray,
    quantiles: Sequence[float],
    error: str = "",
) -> pd.DataFrame:
    """Long rows for one (replication, method); a failed cell keeps its horizons with NaN scores."""
    H = truth.size
    blank = np.full(H, np.nan)
    frame = pd.DataFrame(
        {
            "scenario": cfg.kind.value,
            "T": cfg.T,
            "method": method,
            "rep": rep,
            "h": np.arange(H),
            "estimate": date.estimate if date is not None else blank,
            "lower": date.lower if date is not None and date.has_bounds else blank,
            "upper": date.upper if date is not None and date.has_bounds else blank,
            "truth": truth,
        }
    )
    frame["sq_error"] = (frame["estimate"] - frame["truth"]) ** 2
    if date is not None and date.has_bounds:
        frame["covered"] = ((date.lower <= truth) & (truth <= date.upper)).astype(float)
    else:
        frame["covered"] = blank
    frame["status"] = "ok" if date is not None else "failed"
    frame["error"] = error
    for q in quantiles:
        frame[quantile_column(q)] = _interval_hits(date, truth, q) if date is not None else blank
    return frame[list(RESULT_COLUMNS) + [quantile_column(q) for q in quantiles]]


def run_replication(cfg: ScenarioConfig, methods: Sequence[str], settings: RunSettings, rep: int) -> str:
    """Simulate, estimate and score one replication; returns the shard CSV text."""
    sim = simulate_scenario(cfg, rep)
    truth = true_date_oracle(cfg).estimate
    frames: List[pd.DataFrame] = []
    for method in methods:
        try:
            result = estimate(method, sim.panel, settings, seed=sim.rep_seed, true_propensity=sim.propensity)
            frames.append(score_rows(cfg, method, rep, result.date, truth, settings.eval.quantiles))
        except DatekitError as exc:
            logger.warning("Replication %s, method %s failed: %s", rep, method, exc)
            frames.append(score_rows(cfg, method, rep, None, truth, settings.eval.quantiles, error=f"{type(exc).__name__}: {exc}"))
    return frame_to_csv_text(pd.concat(frames, ignore_index=True))


def _shard_task(cfg: ScenarioConfig, methods: Sequence[str], settings: RunSettings, rep: int, target: Path) -> int:
    atomic_write_text(target, run_replication(cfg, methods, settings, rep))
    return rep


def merge_shards(out_dir: Path, replications: int) -> Path:
    """Concatenate shards in replication order under a single header."""
    header: Optional[str] = None
    body: List[str] = []
    for rep in range(replications):
        lines = (out_dir / shard_name(rep)).read_text().splitlines(keepends=True)
        if header is None:
            header = lines[0]
        body.extend(lines[1:])
    target = out_dir / RESULTS_NAME
    atomic_write_text(target, (header or "") + "".join(body))
    return target


def _pending(manifest: RunManifest, out_dir: Path, replications: int) -> List[int]:
    return [rep for rep in range(replications) if not manifest.verify(out_dir, shard_name(rep))]


def run_scenario(
    cfg: ScenarioConfig,
    methods: Sequence[str],
    out_dir: Path,
    settings: Optional[RunSettings] = None,
    workers: Optional[int] = None,
    *,
    command: Optional[List[str]] = None,
) -> RunManifest:
    settings = settings or RunSettings()
    methods = list(methods)
    require_compatible(methods, cfg.kind)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_jobs = settings.effective_workers(workers)
    digest = config_hash(cfg, methods, settings)

    manifest = RunManifest.load(out_dir)
    if manifest is not None and manifest.config_hash != digest:
        logger.warning("Configuration changed since the last run in %s; recomputing every replication", out_dir)
        manifest = None
    if manifest is None:
        manifest = RunManifest(command=command or [], config_hash=digest, seed=cfg.seed)
    elif command:
        manifest.command = command

    scenario_path = out_dir / SCENARIO_NAME
    atomic_write_text(scenario_path, cfg.to_json())
    manifest.record(out_dir, scenario_path)

    pending = _pending(manifest, out_dir, cfg.replications)
    logger.info(
        "Scenario %s T=%s: %s of %s replications pending, methods=%s, workers=%s",
        cfg.kind.value,
        cfg.T,
        len(pending),
        cfg.replications,
        ",".join(methods),
        n_jobs,
    )
    tasks = (delayed(_shard_task)(cfg, methods, settings, rep, out_dir / shard_name(rep)) for rep in pending)
    for rep in Parallel(n_jobs=n_jobs, return_as="generator")(tasks):
        manifest.record(out_dir, out_dir / shard_name(rep))
        manifest.save(out_dir)
        logger.debug("Shard %s written", rep)

    results = merge_shards(out_dir, cfg.replications)
    manifest.record(out_dir, results)
    manifest.save(out_dir)
    logger.info("Results merged into %s", results)
    return manifest


def load_results(run_dirs: Sequence[Path]) -> pd.DataFrame:
    frames: Dict[Path, pd.DataFrame] = {}
    for run_dir in run_dirs:
        path = Path(run_dir) / RESULTS_NAME
        if not path.exists():
            raise FileNotFoundError(f"No {RESULTS_NAME} in {run_dir}")
        frames[path] = pd.read_csv(path, keep_default_na=False, na_values=[""])
    return pd.concat(frames.values(), ignore_index=True)
