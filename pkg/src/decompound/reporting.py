"""CSV / JSON report writing with self-describing schemas.

Reports are byte-reproducible for a fixed config and seed: CSV cells are
written with 17 significant digits and no timestamps; the environment stamp
records package versions and the git revision but no wall-clock time.
"""

from __future__ import annotations

import json
import platform
import subprocess
import sys
from pathlib import Path

import numpy as np


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, columns: dict[str, str], rows: list[dict]) -> None:
    """Write rows (dicts keyed by column name) plus a .schema.json sidecar."""
    path = Path(path)
    names = list(columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in names) + "\n")
    schema = {"columns": [{"name": c, "description": d} for c, d in columns.items()]}
    with open(path.with_suffix(path.suffix + ".schema.json"), "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)
        fh.write("\n")


def environment_stamp() -> dict:
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5
        ).stdout.strip()
    except Exception:
        rev = ""
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "git_revision": rev or "unknown",
    }


def write_summary(path: Path, config_echo: dict, results: dict) -> None:
    payload = {"config": config_echo, "results": results, "environment": environment_stamp()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.bool_,)):
        return bool(x)
    raise TypeError(f"cannot serialise {type(x)}")
