"""Run manifests: digests of inputs and outputs for reproducibility checks.

Every CLI command writes one manifest into its output directory. Chained
stages can be audited by comparing a stage's output digests with the next
stage's input digests.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    seed: int
    config_snapshot: dict = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    tool_version: str = __version__
    _clock: dict[str, float] = field(default_factory=dict, repr=False)

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = file_digest(path)

    def start(self, stage: str) -> None:
        self._clock[stage] = time.monotonic()

    def stop(self, stage: str) -> None:
        self.timings[stage] = time.monotonic() - self._clock.pop(stage)

    def write(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        payload = {
            "command": self.command,
            "seed": self.seed,
            "config": self.config_snapshot,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timings": self.timings,
            "tool_version": self.tool_version,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
        return path


def load_manifest(out_dir: str | Path) -> dict:
    return json.loads((Path(out_dir) / "manifest.json").read_text(encoding="utf-8"))
