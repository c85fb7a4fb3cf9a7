"""Loading and aligning exported feature matrices.

Each feature set arrives as one CSV with a ``path`` key column, a binary
``label`` column, and the feature block. Rows are normalized to
path-lexicographic order on load so that one set of resampling indices
applies to every feature set of the same project.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

PATH_COLUMN = "path"
LABEL_COLUMN = "label"


class DatasetError(Exception):
    """A feature CSV is missing, malformed, or inconsistent with its peers."""


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """One feature set for one project, rows sorted by file path."""

    feature_set_id: str
    paths: tuple[str, ...]
    columns: tuple[str, ...]
    matrix: np.ndarray  # shape (len(paths), len(columns))
    labels: np.ndarray  # shape (len(paths),), values in {0, 1}

    @property
    def width(self) -> int:
        return len(self.columns)

    def __len__(self) -> int:
        return len(self.paths)


def load_feature_table(source: str | Path, feature_set_id: str | None = None) -> FeatureTable:
    """Read one exported matrix. ``feature_set_id`` defaults to the file stem."""
    source = Path(source)
    if feature_set_id is None:
        feature_set_id = source.stem
    try:
        fh = open(source, newline="")
    except OSError as exc:
        raise DatasetError(f"cannot read feature table {source}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{source}: empty file") from None
        if len(header) < 3 or header[0] != PATH_COLUMN or header[1] != LABEL_COLUMN:
            raise DatasetError(
                f"{source}: header must be '{PATH_COLUMN},{LABEL_COLUMN},<features...>', got {header[:3]}"
            )
        columns = tuple(header[2:])
        rows: dict[str, tuple[int, list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DatasetError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
            path = row[0]
            if not path:
                raise DatasetError(f"{source}:{lineno}: empty path")
            if path in rows:
                raise DatasetError(f"{source}:{lineno}: duplicate path {path!r}")
            if row[1] not in ("0", "1"):
                raise DatasetError(f"{source}:{lineno}: label must be 0 or 1, got {row[1]!r}")
            try:
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise DatasetError(f"{source}:{lineno}: {exc}") from None
            bad = next((j for j, v in enumerate(values) if not math.isfinite(v)), None)
            if bad is not None:
                raise DatasetError(f"{source}:{lineno}: non-finite value in column {columns[bad]!r}")
            rows[path] = (int(row[1]), values)
    if not rows:
        raise DatasetError(f"{source}: no data rows")
    paths = tuple(sorted(rows))
    matrix = np.array([rows[p][1] for p in paths], dtype=float)
    labels = np.array([rows[p][0] for p in paths], dtype=int)
    return FeatureTable(feature_set_id, paths, columns, matrix, labels)


def align_feature_tables(tables: Mapping[str, FeatureTable]) -> dict[str, FeatureTable]:
    """Check that all tables share row keys and labels; return them in order.

    The bootstrap draws one index vector per resample and applies it to
    every feature set, which is only meaningful when row i names the same
    file (with the same label) everywhere.
    """
    if not tables:
        raise DatasetError("no feature tables to align")
    items = list(tables.items())
    ref_id, ref = items[0]
    for fs_id, table in items[1:]:
        if table.paths != ref.paths:
            missing = set(ref.paths) - set(table.paths)
            extra = set(table.paths) - set(ref.paths)
            sample = ", ".join(sorted(missing | extra)[:5])
            raise DatasetError(
                f"feature tables {ref_id!r} and {fs_id!r} do not share row keys "
                f"({len(missing)} missing, {len(extra)} extra; e.g. {sample})"
            )
        if not np.array_equal(table.labels, ref.labels):
            idx = int(np.nonzero(table.labels != ref.labels)[0][0])
            raise DatasetError(
                f"label mismatch between {ref_id!r} and {fs_id!r} at row {table.paths[idx]!r}"
            )
    return dict(items)
