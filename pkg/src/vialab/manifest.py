"""Reproducibility record written next to every scenario run's outputs.

The manifest lists the scenario, a hash of the canonical config
serialization, the tool version, every output file, and wall-clock seconds
per pipeline stage.  Because the timings necessarily vary run to run, the
manifest file itself is the one output excluded when comparing runs
byte-for-byte; everything it lists must be identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import IOError_

MANIFEST_FILENAME = "manifest.json"


@dataclass(frozen=True)
class RunManifest:
    """Record of one scenario run."""

    scenario: str
    config_sha256: str
    tool_version: str
    outputs: tuple          # relative file names, sorted
    stage_seconds: dict     # stage name -> wall-clock seconds, pipeline order

    def to_json(self) -> str:
        return json.dumps({
            "scenario": self.scenario,
            "config_sha256": self.config_sha256,
            "tool_version": self.tool_version,
            "outputs": list(self.outputs),
            "stage_seconds": {k: round(v, 6) for k, v in self.stage_seconds.items()},
        }, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        try:
            raw = json.loads(text)
            return cls(raw["scenario"], raw["config_sha256"], raw["tool_version"],
                       tuple(raw["outputs"]), dict(raw["stage_seconds"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise IOError_(f"malformed manifest: {exc}") from None

    def write(self, out_dir) -> str:
        """Write manifest.json after checking every listed output exists."""
        for rel in self.outputs:
            if not os.path.exists(os.path.join(out_dir, rel)):
                raise IOError_(f"manifest lists missing output {rel!r}")
        path = os.path.join(out_dir, MANIFEST_FILENAME)
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.to_json())
        except OSError as exc:
            raise IOError_(f"cannot write {path}: {exc}") from None
        return path
