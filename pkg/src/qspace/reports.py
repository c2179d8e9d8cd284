"""Deterministic JSON/CSV report writers.

Every JSON report embeds the tool version and the config fingerprint; CSV
files carry a plain header row so they stay trivially loadable.  Writers
refuse to overwrite unless told otherwise.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from . import __version__


def config_fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def check_overwrite(path: Path, force: bool):
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")


def write_json(path: str | Path, payload: dict, config: dict, force: bool = False):
    path = Path(path)
    check_overwrite(path, force)
    doc = {
        "tool": "qspace",
        "version": __version__,
        "config_fingerprint": config_fingerprint(config),
        "config": config,
    }
    doc.update(payload)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def write_csv(path: str | Path, rows: list[dict], force: bool = False,
              columns: list[str] | None = None):
    path = Path(path)
    check_overwrite(path, force)
    if not rows:
        path.write_text("")
        return
    cols = columns or list(rows[0].keys())
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in cols})
