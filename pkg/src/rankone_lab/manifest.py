"""Run manifests: config hash, row counts and content digests of outputs.

Wall-clock time is recorded but never hashed, so identical configs yield
byte-identical data files and matching digest tables.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config_digest: str
    started: float = field(default_factory=time.time)
    row_counts: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def record_file(self, path: Path, rows: int | None = None) -> None:
        self.files[path.name] = sha256_file(path)
        if rows is not None:
            self.row_counts[path.name] = rows

    def write(self, out_dir: Path) -> Path:
        doc = {
            "artifact_version": __version__,
            "command": self.command,
            "config_digest": self.config_digest,
            "wall_clock_seconds": time.time() - self.started,
            "row_counts": dict(sorted(self.row_counts.items())),
            "files": dict(sorted(self.files.items())),
        }
        path = out_dir / "manifest.json"
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
