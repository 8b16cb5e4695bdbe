"""Run manifests: what ran, with which inputs, and what came out.

A manifest is written twice.  Before any computation starts it lands on
disk with status "incomplete", so a crashed or killed run is
distinguishable from a finished one by inspection alone.  After the
run's outputs exist it is rewritten with status "complete" and a file
inventory (name, size, content hash).  The two wall-clock fields are
the only nondeterministic entries; everything else is a pure function
of the config and the outputs.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__

SCHEMA = "run-manifest-v1"

# fields that legitimately differ between byte-identical reruns
VOLATILE_KEYS = ("started", "finished")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def start_manifest(out_dir: Path, experiment: str, config_echo: dict, seed: int) -> Path:
    """Write the incomplete marker; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema": SCHEMA,
        "experiment": experiment,
        "config": config_echo,
        "code_version": __version__,
        "seed": int(seed),
        "status": "incomplete",
        "started": _now(),
        "finished": None,
        "outputs": [],
    }
    path = out_dir / "manifest.json"
    path.write_text(_dump(doc))
    return path


def finalize_manifest(path: Path, outputs: Sequence[Path], notes: dict | None = None) -> None:
    """Rewrite with status complete and the inventory of output files."""
    path = Path(path)
    doc = json.loads(path.read_text())
    inventory = []
    for p in outputs:
        p = Path(p)
        data = p.read_bytes()
        inventory.append(
            {
                "name": p.name,
                "bytes": len(data),
                "sha256": hashlib.sha256(data).hexdigest(),
            }
        )
    doc["status"] = "complete"
    doc["finished"] = _now()
    doc["outputs"] = sorted(inventory, key=lambda d: d["name"])
    if notes:
        doc["notes"] = notes
    path.write_text(_dump(doc))


def read_manifest(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def strip_volatile(doc: dict) -> dict:
    """Copy with wall-clock fields removed, for determinism comparisons."""
    return {k: v for k, v in doc.items() if k not in VOLATILE_KEYS}
