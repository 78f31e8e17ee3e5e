"""Snapshot CSV import/export and small text-output helpers.

Snapshot files have the header ``x_m,y_m,re_pa,im_pa`` and one row per point.
Numbers are written with ``repr`` so every double round-trips exactly; files
are UTF-8 with LF line endings.
"""
from __future__ import annotations

import csv
import io as _io
import math
from pathlib import Path

import numpy as np

from .field import PressureSnapshot

SNAPSHOT_HEADER = ("x_m", "y_m", "re_pa", "im_pa")


class SnapshotFormatError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def format_csv_rows(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def snapshot_to_csv(snap: PressureSnapshot) -> str:
    rows = [[repr(float(x)), repr(float(y)), repr(float(p.real)), repr(float(p.imag))]
            for (x, y), p in zip(snap.positions, snap.pressures)]
    return format_csv_rows(SNAPSHOT_HEADER, rows)


def export_snapshot(snap: PressureSnapshot, path) -> None:
    write_text(path, snapshot_to_csv(snap))


def import_snapshot(path, frequency_hz: float, provenance: str | None = None) -> PressureSnapshot:
    """Parse a snapshot CSV.

    Raises
    ------
    SnapshotFormatError
        On a wrong header, wrong field count, unparsable or non-finite
        number, or a file without data rows.  The message names the line.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SnapshotFormatError(path, 1, "empty file")
    header = tuple(h.strip() for h in lines[0].rstrip("\r").split(","))
    if header != SNAPSHOT_HEADER:
        raise SnapshotFormatError(path, 1, f"expected header {','.join(SNAPSHOT_HEADER)}")
    values = []
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.rstrip("\r").split(",")
        if len(parts) != 4:
            raise SnapshotFormatError(path, lineno, f"expected 4 fields, got {len(parts)}")
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise SnapshotFormatError(path, lineno, "unparsable number") from None
        if not all(math.isfinite(v) for v in row):
            raise SnapshotFormatError(path, lineno, "non-finite value")
        values.append(row)
    if not values:
        raise SnapshotFormatError(path, 1, "snapshot has no data rows")
    a = np.array(values)
    return PressureSnapshot(frequency_hz, a[:, :2], a[:, 2] + 1j * a[:, 3],
                            provenance or f"import:{path.name}")
