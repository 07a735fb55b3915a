"""
Artifact writers: fixed-format CSV, JSON documents and the run manifest.

Floats are written as ``%.8e`` (9 significant digits) so reruns of the
same configuration produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

FLOAT_FMT = "%.8e"


def format_value(v) -> str:
    if isinstance(v, (bool,)):
        return "1" if v else "0"
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isnan(x):
            return "nan"
        return FLOAT_FMT % x
    return str(v)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": float(FLOAT_FMT % obj.real), "im": float(FLOAT_FMT % obj.imag)}
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    if isinstance(obj, float):
        return float(FLOAT_FMT % obj) if math.isfinite(obj) else None
    return str(obj)


@dataclass
class Manifest:
    """Artifacts written by one command plus run metadata."""

    out_dir: Path
    command: str
    config_digest: str
    version: str
    artifacts: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    def _register(self, name, path, fmt):
        path = Path(path)
        self.artifacts.append({
            "name": name,
            "path": path.name,
            "format": fmt,
            "sha256": sha256_file(path),
        })
        return path

    def write_csv(self, name, header, rows) -> Path:
        path = self.out_dir / f"{name}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([format_value(v) for v in row])
        return self._register(name, path, "csv")

    def write_json(self, name, doc) -> Path:
        path = self.out_dir / f"{name}.json"
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return self._register(name, path, "json")

    def add_file(self, name, path, fmt) -> Path:
        return self._register(name, path, fmt)

    def verify(self) -> bool:
        return all(
            (self.out_dir / a["path"]).exists() and sha256_file(self.out_dir / a["path"]) == a["sha256"]
            for a in self.artifacts
        )

    def save(self) -> Path:
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        when = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
        doc = {
            "command": self.command,
            "artifacts": self.artifacts,
            "checks": self.checks,
            "run": {
                "config_digest": self.config_digest,
                "version": self.version,
                "timestamp": when.replace(microsecond=0).isoformat(),
            },
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n", encoding="utf-8")
        return path
