"""Occupancy heat-maps from replay logs.

Counts how many recorded ticks each map cell held a living ally unit,
summed over every log in a directory.  Emitted as a CSV matrix (one row
per y, northmost row last) plus a density normalized by total mass.
"""

from __future__ import annotations

import glob
import os

import numpy as np

from ..engine.replaylog import read_replay


def heatmap_counts(log_paths, width: int | None = None, height: int | None = None) -> np.ndarray:
    """Per-cell ally occupancy counts across all ticks of all logs.

    Grid size comes from the first log header unless given explicitly.
    An empty path list with explicit dimensions yields a zero matrix.
    """
    counts = None
    if width is not None and height is not None:
        counts = np.zeros((height, width), dtype=np.int64)
    for path in log_paths:
        header, records = read_replay(path)
        if counts is None:
            counts = np.zeros((header["height"], header["width"]), dtype=np.int64)
        for rec in records:
            for uid, team, x, y, health, sieged, last_action in rec["units"]:
                if team == 0 and health > 0.0:
                    cx = min(max(int(x), 0), counts.shape[1] - 1)
                    cy = min(max(int(y), 0), counts.shape[0] - 1)
                    counts[cy, cx] += 1
    if counts is None:
        raise ValueError("no logs given and no grid size to fall back on")
    return counts


def collect_logs(directory: str) -> list[str]:
    return sorted(glob.glob(os.path.join(directory, "*.jsonl")))


def write_heatmap_csv(counts: np.ndarray, out_path: str) -> None:
    """Counts matrix, then a blank line, then the normalized density."""
    total = counts.sum()
    density = counts / total if total > 0 else counts.astype(np.float64)
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in counts:
            fh.write(",".join(str(int(v)) for v in row) + "\n")
        fh.write("\n")
        for row in density:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def emit_heatmaps(log_dir: str, out_path: str, late_dir: str | None = None) -> list[str]:
    """Write one heat-map CSV, or an early/late pair when a second log
    directory is given (suffix _late before the extension)."""
    written = []
    counts = heatmap_counts(collect_logs(log_dir))
    write_heatmap_csv(counts, out_path)
    written.append(out_path)
    if late_dir is not None:
        root, ext = os.path.splitext(out_path)
        late_path = f"{root}_late{ext or '.csv'}"
        late_counts = heatmap_counts(collect_logs(late_dir))
        write_heatmap_csv(late_counts, late_path)
        written.append(late_path)
    return written
