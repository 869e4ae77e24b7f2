"""Run manifest: provenance plus a content checksum for every output file."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from src.core.panel_io import atomic_write_text

MANIFEST_NAME = "manifest.json"
SOURCE_ROOT = Path(__file__).resolve().parents[1]


def file_checksum(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def text_checksum(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def content_version(root: Path = SOURCE_ROOT) -> str:
    """Git-style digest over the package sources (path + blob hash of every .py file)."""
    digest = hashlib.sha1()
    for path in sorted(root.rglob("*.py")):
        if "tests" in path.parts:
            continue
        blob = path.read_bytes()
        digest.update(str(path.relative_to(root)).encode())
        digest.update(hashlib.sha1(b"blob %d\0" % len(blob) + blob).digest())
    return digest.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(slots=True)
class RunManifest:
    command: List[str]
    config_hash: str
    seed: int
    version: str = field(default_factory=content_version)
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)
    outputs: Dict[str, str] = field(default_factory=dict)

    def record(self, root: Path, path: Path) -> str:
        checksum = file_checksum(path)
        self.outputs[str(path.relative_to(root))] = checksum
        self.updated_at = _now()
        return checksum

    def verify(self, root: Path, relative: str) -> bool:
        expected = self.outputs.get(relative)
        target = root / relative
        return expected is not None and target.exists() and file_checksum(target) == expected

    def save(self, root: Path) -> Path:
        path = root / MANIFEST_NAME
        atomic_write_text(path, json.dumps(asdict(self), indent=2, sort_keys=True))
        return path

    @classmethod
    def load(cls, root: Path) -> Optional["RunManifest"]:
        path = root / MANIFEST_NAME
        if not path.exists():
            return None
        data = json.loads(path.read_text())
        return cls(**data)
