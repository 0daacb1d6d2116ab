"""Trajectory CSVs and run reports.

Trajectory files carry one row per step. Numbers are written with nine
significant digits, missing values (a rule-based run has no solver cost) as
empty cells, and the step flags joined with ``|``. Reports are JSON documents.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import PigventError, TimeseriesError
from .plant import LOG_COLUMNS, TrajectoryLog
from .scenario import parse_timestamp

RESULT_COLUMNS = ("timestamp",) + LOG_COLUMNS + ("flags",)

# Row labels of the controller comparison table
TABLE_LABELS = {
    "comfort_temp_pct": "Comfort Temperature Zone (Time Percentage)",
    "comfort_rh_pct": "Comfort Humidity Zone (Time Percentage)",
    "energy_kwh": "Energy Consumption (kWh)",
}
VALIDATION_LABELS = {"rmse": "RMSE", "mape": "MAPE (%)", "sd": "SD", "r2": "R2"}


class OutputError(PigventError, OSError):
    """An output file could not be written."""


def format_number(x: float) -> str:
    x = float(x)
    return "" if math.isnan(x) else format(x, ".9g")


def write_results(log: TrajectoryLog, path) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(RESULT_COLUMNS)
            cols = [getattr(log, name) for name in LOG_COLUMNS]
            for k in range(len(log)):
                out.writerow([log.timestamps[k].isoformat()] + [format_number(c[k]) for c in cols]
                             + ["|".join(log.flags[k])])
    except OSError as err:
        raise OutputError(f"{path}: {err.strerror or err}") from None


def read_results(path, dt: float = 600.0) -> TrajectoryLog:
    """Parse a trajectory CSV written by :func:`write_results`.

    The step is inferred from the first two timestamps; ``dt`` is used for
    files with fewer than two rows.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != RESULT_COLUMNS:
        raise TimeseriesError(f"{path}: not a trajectory file (unexpected header)")
    body = rows[1:]
    n = len(body)
    cols = {name: np.empty(n) for name in LOG_COLUMNS}
    stamps, flags = [], []
    for k, row in enumerate(body):
        if len(row) != len(RESULT_COLUMNS):
            raise TimeseriesError(f"expected {len(RESULT_COLUMNS)} cells", k + 1)
        stamps.append(parse_timestamp(row[0]))
        for j, name in enumerate(LOG_COLUMNS, start=1):
            cols[name][k] = float(row[j]) if row[j] else math.nan
        flags.append(tuple(row[-1].split("|")) if row[-1] else ())
    if n >= 2:
        dt = (stamps[1] - stamps[0]).total_seconds()
    return TrajectoryLog(timestamps=stamps, flags=flags, dt=dt, **cols)


def _clean(obj):
    """Replace non-finite floats, which JSON cannot hold, with ``None``."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_report(report: dict, path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as err:
        raise OutputError(f"{path}: {err.strerror or err}") from None


def read_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def comparison_table(metrics_by_controller: dict) -> dict:
    """``{label: {controller: value}}`` with the comparison-table row labels."""
    return {label: {name: m.get(key) for name, m in metrics_by_controller.items()}
            for key, label in TABLE_LABELS.items()}


def validation_table(metrics_by_series: dict) -> dict:
    return {label: {name: m.get(key) for name, m in metrics_by_series.items()}
            for key, label in VALIDATION_LABELS.items()}


def render_table(table: dict, title: str = "") -> str:
    """Plain-text rendering of a ``{row: {column: value}}`` table."""
    columns = []
    for row in table.values():
        for c in row:
            if c not in columns:
                columns.append(c)
    width = max([len(r) for r in table] + [len(title)])
    lines = [title.ljust(width) + "".join(f"{c:>14}" for c in columns)]
    for label, row in table.items():
        cells = []
        for c in columns:
            v = row.get(c)
            cells.append(f"{'-':>14}" if v is None else f"{v:>14.3f}")
        lines.append(label.ljust(width) + "".join(cells))
    return "\n".join(lines) + "\n"


def base_report(command: str, scenario) -> dict:
    return {
        "command": command,
        "software": {"name": "pigvent", "version": __version__},
        "scenario": scenario.name,
        "inputs": {"sha256": scenario.digests()},
        "config": scenario.config(),
    }
