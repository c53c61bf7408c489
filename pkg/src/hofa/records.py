"""Result records, canonical JSON and CSV export."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON-ready values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, complex):
        return [_plain(obj.real), _plain(obj.imag)]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def dump(obj, path: str | Path | None) -> str:
    """Pretty, key-sorted JSON with a trailing newline; written to ``path`` if given."""
    text = json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"
    if path is not None and str(path) != "-":
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


@dataclass
class ResultRecord:
    experiment: str
    config: dict
    metrics: dict = field(default_factory=dict)
    witnesses: object = None
    wall_time: float | None = None

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "experiment": self.experiment,
            "config": self.config,
            "config_hash": self.config_hash,
            "metrics": self.metrics,
            "witnesses": self.witnesses,
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


def write_csv(records: Iterable[dict], path: str | Path) -> list[str]:
    """One row per record: experiment, config_hash, then metric columns in sorted order."""
    records = list(records)
    metric_names = sorted({k for r in records for k, v in r.get("metrics", {}).items() if not isinstance(v, (dict, list))})
    columns = ["experiment", "config_hash"] + metric_names
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in records:
            m = r.get("metrics", {})
            w.writerow([r.get("experiment"), r.get("config_hash")] + [_plain(m.get(k, "")) for k in metric_names])
    return columns
