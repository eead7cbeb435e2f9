"""Run manifests and artifact writing.

Every command run produces a manifest (config hash, version, per-stage
values and pass/fail), CSV data files, and a plain-text report.  All of
these are byte-deterministic for a given config: floats are serialized
with shortest-roundtrip repr and dict keys are sorted.  Wall-clock
timings, which can never be deterministic, go to a separate timings.json
that is excluded from the reproducibility contract.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

SCHEMA_VERSION = 1


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    # bool precedes int: Python bools are ints and would serialize as 0/1
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if value is None or isinstance(value, str):
        return value
    return str(value)


@dataclass
class StageRecord:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str
    seed: int
    side: int
    model_name: str
    backend: str
    stages: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return bool(self.stages) and all(s.passed for s in self.stages)

    def add(self, stage: StageRecord) -> StageRecord:
        self.stages.append(stage)
        return stage

    def payload(self) -> dict:
        return _jsonable(
            {
                "schema": SCHEMA_VERSION,
                "command": self.command,
                "config_sha256": self.config_hash,
                "version": self.version,
                "seed": self.seed,
                "side": self.side,
                "model": self.model_name,
                "backend": self.backend,
                "timings": "timings.json",
                "passed": self.all_passed,
                "stages": [
                    {
                        "name": s.name,
                        "passed": s.passed,
                        "error": s.error,
                        "values": s.values,
                    }
                    for s in self.stages
                ],
                "artifacts": sorted(self.artifacts),
            }
        )


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _cell(value) -> str:
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int, np.bool_, bool)):
        return str(int(value)) if not isinstance(value, (bool, np.bool_)) else str(bool(value))
    return str(value)


def write_csv(path: str, header: list[str], rows) -> None:
    """Plain deterministic CSV: no quoting needed for our cell types."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _fmt(value) -> str:
    if isinstance(value, (np.floating, float)):
        return f"{float(value):.6g}"
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6, separator=", ")
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def emit_report(manifest: RunManifest) -> str:
    """Human-readable run summary; one block per stage, values inline."""
    if not manifest.stages:
        raise DataError("no stages executed")
    lines = [
        f"rwre {manifest.command}  model={manifest.model_name}  side={manifest.side}  seed={manifest.seed}",
        f"config sha256 {manifest.config_hash[:16]}…  version {manifest.version}  backend {manifest.backend}",
        "",
    ]
    for s in manifest.stages:
        status = "PASS" if s.passed else "FAIL"
        lines.append(f"[{status}] {s.name}")
        if s.error:
            lines.append(f"    error: {s.error}")
        for key in sorted(s.values):
            lines.append(f"    {key} = {_fmt(s.values[key])}")
    lines.append("")
    if manifest.artifacts:
        lines.append("artifacts: " + ", ".join(sorted(manifest.artifacts)))
    n_pass = sum(1 for s in manifest.stages if s.passed)
    lines.append(f"overall: {'PASS' if manifest.all_passed else 'FAIL'} ({n_pass}/{len(manifest.stages)} stages)")
    return "\n".join(lines) + "\n"


def write_artifacts(out_dir: str, manifest: RunManifest, timings: dict) -> str:
    """Write manifest.json, timings.json, and report.txt; returns report text."""
    os.makedirs(out_dir, exist_ok=True)
    report = emit_report(manifest)
    manifest.artifacts = sorted(set(manifest.artifacts) | {"manifest.json", "report.txt"})
    write_json(os.path.join(out_dir, "manifest.json"), manifest.payload())
    write_json(os.path.join(out_dir, "timings.json"), timings)
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        fh.write(report)
    return report
