"""Utility helpers to load YAML run settings with environment expansion.

`load_config` returns the plain dict; `ConfigLoader` layers the typed `RunSettings`
on top of it for the CLI and the replication runner.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

try:
    import yaml
except ModuleNotFoundError:  # pragma: no cover - ensures clearer error at runtime
    yaml = None

ENV_PATTERN = re.compile(r"\$\{([^}]+)\}")

DEFAULT_GRID: Tuple[float, ...] = (0.95, 0.99, 0.999)
DEFAULT_QUANTILES: Tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(1, 20))


def load_config(path: Path) -> Dict[str, Any]:
    """Load YAML config expanding ${PROJECT_ROOT}, ${ENV:VAR} and ${VAR:-default}."""

    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")

    project_root = path.resolve().parent.parent
    _load_dotenv(project_root / ".env")

    if path.suffix not in {".yaml", ".yml"}:
        raise ValueError("Unsupported config format; only YAML supported")
    if yaml is None:
        raise ModuleNotFoundError("PyYAML is required to read YAML configs; install pyyaml")

    data = yaml.safe_load(path.read_text()) or {}
    return _expand(data, project_root)


def _load_dotenv(env_path: Path) -> None:
    if not env_path.exists():
        return
    for line in env_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        os.environ.setdefault(key.strip(), value.strip().strip('"'))


def _expand(value: Any, project_root: Path) -> Any:
    if isinstance(value, dict):
        return {k: _expand(v, project_root) for k, v in value.items()}
    if isinstance(value, list):
        return [_expand(v, project_root) for v in value]
    if isinstance(value, str):
        return _expand_string(value, project_root)
    return value


def _expand_string(value: str, project_root: Path) -> str:
    def replacer(match: re.Match[str]) -> str:
        token = match.group(1)
        if ":-" in token and not token.startswith("ENV:"):
            name, default = token.split(":-", 1)
            return os.environ.get(name, default)
        if token == "PROJECT_ROOT":
            return str(project_root)
        if token.startswith("ENV:"):
            return os.environ.get(token.split(":", 1)[1], "")
        return os.environ.get(token, match.group(0))

    value = value.replace("${PROJECT_ROOT}", str(project_root))
    value = ENV_PATTERN.sub(replacer, value)
    value = os.path.expandvars(value)
    return os.path.expanduser(value)


# ---------------------------------------------------------------------------
# Typed run settings consumed by the CLI, the runner and the estimators.
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class LogSettings:
    directory: Path = Path("logs")
    level: str = "INFO"


@dataclass(slots=True)
class DlmSettings:
    draws: int = 5000
    grid: Tuple[float, ...] = DEFAULT_GRID
    contrast: str = "simulate-forward"
    intercept: bool = True
    form: str = "lag"
    prior_lag: float = 0.95
    n0: float = 20.0
    s0: float = 0.01


@dataclass(slots=True)
class DipwSettings:
    stabilized: bool = True
    propensity: str = "logistic"
    clip: float = 1e-6


@dataclass(slots=True)
class EvalSettings:
    level: float = 0.95
    quantiles: Tuple[float, ...] = DEFAULT_QUANTILES


@dataclass(slots=True)
class RunnerSettings:
    workers: int = 1
    placebo_margin: int = 10


@dataclass(slots=True)
class RunSettings:
    output: Path = Path("results")
    logs: LogSettings = field(default_factory=LogSettings)
    dlm: DlmSettings = field(default_factory=DlmSettings)
    dipw: DipwSettings = field(default_factory=DipwSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)
    runner: RunnerSettings = field(default_factory=RunnerSettings)

    def effective_workers(self, requested: Optional[int] = None) -> int:
        """Worker count after the DATEKIT_THREADS cap; an explicit lower request wins."""
        workers = requested if requested is not None else self.runner.workers
        cap = os.environ.get("DATEKIT_THREADS")
        if cap:
            try:
                workers = min(workers, int(cap))
            except ValueError:
                pass
        return max(1, int(workers))


def _floats(values: Optional[List[Any]], default: Tuple[float, ...]) -> Tuple[float, ...]:
    if not values:
        return default
    return tuple(float(v) for v in values)


class ConfigLoader:
    """Typed view over ``config/datekit.yaml``; missing keys keep their defaults."""

    def __init__(self, path: Path) -> None:
        self.path = path

    def load(self) -> RunSettings:
        raw = load_config(self.path)
        base = RunSettings()

        logs_raw = raw.get("logs", {}) or {}
        logs = LogSettings(
            directory=Path(logs_raw.get("directory", base.logs.directory)),
            level=str(logs_raw.get("level", base.logs.level)).upper(),
        )
        dlm_raw = raw.get("dlm", {}) or {}
        dlm = DlmSettings(
            draws=int(dlm_raw.get("draws", base.dlm.draws)),
            grid=_floats(dlm_raw.get("grid"), base.dlm.grid),
            contrast=str(dlm_raw.get("contrast", base.dlm.contrast)),
            intercept=bool(dlm_raw.get("intercept", base.dlm.intercept)),
            form=str(dlm_raw.get("form", base.dlm.form)),
            prior_lag=float(dlm_raw.get("prior_lag", base.dlm.prior_lag)),
            n0=float(dlm_raw.get("n0", base.dlm.n0)),
            s0=float(dlm_raw.get("s0", base.dlm.s0)),
        )
        dipw_raw = raw.get("dipw", {}) or {}
        dipw = DipwSettings(
            stabilized=bool(dipw_raw.get("stabilized", base.dipw.stabilized)),
            propensity=str(dipw_raw.get("propensity", base.dipw.propensity)),
            clip=float(dipw_raw.get("clip", base.dipw.clip)),
        )
        eval_raw = raw.get("eval", {}) or {}
        evaluation = EvalSettings(
            level=float(eval_raw.get("level", base.eval.level)),
            quantiles=_floats(eval_raw.get("quantiles"), base.eval.quantiles),
        )
        runner_raw = raw.get("runner", {}) or {}
        runner = RunnerSettings(
            workers=int(runner_raw.get("workers", base.runner.workers)),
            placebo_margin=int(runner_raw.get("placebo_margin", base.runner.placebo_margin)),
        )
        return RunSettings(
            output=Path(raw.get("output", base.output)),
            logs=logs,
            dlm=dlm,
            dipw=dipw,
            eval=evaluation,
            runner=runner,
        )
