"""Package-wide logging helpers with rotating files.

Every module logger lives under the ``datekit`` logger, so ``config/logging.yaml`` and
``--log-level`` reach all of them. Per-module files are opened on the first record.
"""
from __future__ import annotations

import logging
import logging.config
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
ROOT_LOGGER = "datekit"


class LazyRotatingFileHandler(RotatingFileHandler):
    """Rotating file handler that creates its directory when the first record arrives."""

    def __init__(self, filename: Path, *, maxBytes: int = 2_000_000, backupCount: int = 3) -> None:  # noqa: N803
        super().__init__(filename, maxBytes=maxBytes, backupCount=backupCount, delay=True)
        self._fallback: Optional[logging.Handler] = None

    def emit(self, record: logging.LogRecord) -> None:
        if self._fallback is None and self.stream is None:
            try:
                Path(self.baseFilename).parent.mkdir(parents=True, exist_ok=True)
                self.stream = self._open()
            except OSError:
                # Read-only checkouts and sandboxed workers still get console output.
                self._fallback = logging.StreamHandler()
                self._fallback.setFormatter(self.formatter)
        if self._fallback is not None:
            self._fallback.emit(record)
            return
        super().emit(record)


def qualified_name(name: str) -> str:
    if name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + "."):
        return name
    return f"{ROOT_LOGGER}.{name}"


def get_logger(name: str, log_dir: Optional[Path], *, level: Optional[int] = None) -> logging.Logger:
    """Logger ``datekit.<name>`` writing to ``<log_dir>/<name>.log`` and propagating to ``datekit``."""
    logger = logging.getLogger(qualified_name(name))
    if logger.handlers:
        return logger

    package = logging.getLogger(ROOT_LOGGER)
    if package.level == logging.NOTSET:
        package.setLevel(logging.INFO)
    if level is not None:
        logger.setLevel(level)

    log_root = log_dir if log_dir is not None else Path("logs")
    short = logger.name[len(ROOT_LOGGER) + 1 :] or ROOT_LOGGER
    file_handler = LazyRotatingFileHandler(log_root / f"{short}.log")
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(file_handler)
    return logger


def configure_cli_logging(config_path: Path, *, level: Optional[str] = None) -> None:
    """Apply ``config/logging.yaml`` to the ``datekit`` logger tree if the file exists."""
    if not config_path.exists():
        return
    from src.core.config_loader import load_config

    cfg = load_config(config_path)
    for handler in (cfg.get("handlers", {}) or {}).values():
        filename = handler.get("filename")
        if filename:
            Path(filename).parent.mkdir(parents=True, exist_ok=True)
    try:
        logging.config.dictConfig(cfg)
    except (OSError, ValueError):
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, datefmt=DATE_FORMAT)
    if level:
        logging.getLogger(ROOT_LOGGER).setLevel(level.upper())
