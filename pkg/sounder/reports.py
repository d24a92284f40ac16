"""
Artifact writers: CSV tables for plotting and YAML for structured output.

Numbers are written with repr precision so reruns produce identical files.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import yaml

from sounder.schemas import to_dict

logger = logging.getLogger(__name__)


def write_csv(path: Path, rows: Iterable[Dict[str, Any]], fieldnames: Optional[Sequence[str]] = None) -> Path:
    """Write dict rows to a CSV file with a header line."""
    rows = [to_dict(r) for r in rows]
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.debug("wrote %s (%d rows)", path, len(rows))
    return path


def render_yaml(data: Any) -> str:
    """Structured text for a result: plain YAML, keys in insertion order."""
    return yaml.safe_dump(to_dict(data), sort_keys=False, default_flow_style=False)


def write_yaml(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_yaml(data))
    logger.debug("wrote %s", path)
    return path


def autocorr_rows(magnitude, max_lag: int) -> List[Dict[str, Any]]:
    """One row per (lag, f, m) of an autocorrelation magnitude array."""
    rows = []
    _, n_freq, n_ant = magnitude.shape
    for lag in range(1, max_lag + 1):
        for f in range(n_freq):
            for m in range(n_ant):
                rows.append({"lag": lag, "f": f, "m": m, "magnitude": float(magnitude[lag, f, m])})
    return rows


def mask_rows(mask) -> List[Dict[str, int]]:
    return [{"n": int(n), "lost": int(bool(v))} for n, v in enumerate(mask)]
