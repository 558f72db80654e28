"""CSV input and output for recordings, label files, and numeric arrays.

Recording CSV layout: UTF-8, comma separated, first row holds channel
labels, every following row is one sample instant. Floats are written with
repr() so a write/read round trip is exact.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ParseError
from .recording import Label, Recording


def read_csv(path, rate: float, source_id: str | None = None) -> Recording:
    """Read a recording from CSV.

    Raises
    ------
    ParseError
        On ragged rows (reports the row number) or non-numeric cells
        (reports row and column).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        channels = [c.strip() for c in header]
        ncol = len(channels)
        rows = []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != ncol:
                raise ParseError(
                    f"{path}: row {rownum} has {len(row)} cells, expected {ncol}"
                )
            vals = np.empty(ncol)
            for colnum, cell in enumerate(row):
                try:
                    vals[colnum] = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell at row {rownum}, "
                        f"column {colnum + 1}: {cell!r}"
                    ) from None
            rows.append(vals)

    if source_id is None:
        source_id = path.stem
    samples = np.array(rows).T if rows else np.empty((ncol, 0))
    return Recording(channels=channels, samples=samples, rate=rate, source_id=source_id)


def write_csv(path, rec: Recording) -> None:
    """Write a recording in the layout read_csv expects."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(rec.channels)
        for t in range(rec.n_samples):
            writer.writerow([repr(float(v)) for v in rec.samples[:, t]])


def read_labels(path) -> list[tuple[str, int, Label]]:
    """Read a label file: CSV with columns source_id, start_sample, label."""
    path = Path(path)
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty label file")
        expected = ["source_id", "start_sample", "label"]
        if [c.strip() for c in header] != expected:
            raise ParseError(
                f"{path}: label header must be {','.join(expected)}, "
                f"got {','.join(header)}"
            )
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ParseError(f"{path}: row {rownum} has {len(row)} cells, expected 3")
            sid, start, lab = (c.strip() for c in row)
            try:
                start_i = int(start)
            except ValueError:
                raise ParseError(
                    f"{path}: row {rownum}: start_sample {start!r} is not an integer"
                ) from None
            try:
                label = Label(lab)
            except ValueError:
                raise ParseError(
                    f"{path}: row {rownum}: unknown label {lab!r}"
                ) from None
            out.append((sid, start_i, label))
    return out


def write_labels(path, entries) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "start_sample", "label"])
        for sid, start, label in entries:
            writer.writerow([sid, int(start), label.value])
