"""CSV log writing with stable formatting, so identical runs produce
byte-identical files."""

from __future__ import annotations

import csv
from pathlib import Path


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.8f}"
    return str(v)


def write_csv_log(path, columns, rows) -> None:
    """Write dict rows under a fixed column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
