"""Deterministic result emission: CSV tables, JSON summaries, manifests.

CSV floats are rendered with 17 significant digits so equal inputs give
byte-identical files; JSON objects are written with sorted keys. The run
hash identifies a (command, config, seed) triple and is stable across
machines.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from . import __version__

FLOAT_FMT = "%.17g"


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return FLOAT_FMT % v
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def run_hash(command: str, config: dict, seed: int) -> str:
    payload = json.dumps(
        {"command": command, "config": config, "seed": seed}, sort_keys=True
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


class RunWriter:
    """Collects output files for one command run and emits the manifest."""

    def __init__(self, out_dir: Path, command: str, config: dict, seed: int):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.seed = seed
        self.calibrations: dict = {}
        self.outputs: list[str] = []
        self._t0 = time.monotonic()

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def csv(self, name: str, header: list[str], rows) -> Path:
        p = self.path(name)
        write_csv(p, header, rows)
        self.outputs.append(name)
        return p

    def json(self, name: str, obj) -> Path:
        p = self.path(name)
        write_json(p, obj)
        self.outputs.append(name)
        return p

    def register(self, name: str) -> None:
        self.outputs.append(name)

    def manifest(self) -> Path:
        doc = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": __version__,
            "calibrations": self.calibrations,
            "wall_clock_seconds": time.monotonic() - self._t0,
            "outputs": sorted(self.outputs),
            "run_hash": run_hash(self.command, self.config, self.seed),
        }
        p = self.path("manifest.json")
        write_json(p, doc)
        return p
