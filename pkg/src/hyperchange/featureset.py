"""Join mined features with the product-metric corpus; export matrices.

The corpus contributes 54 product metrics and the defect label per file;
the mined side contributes 14 scalar metrics, 1,400 vector-metric slots,
and 400 vector-centrality slots. Three feature sets are emitted:
product+scalar (68 columns), product+vector (1,454), and
product+vector+centrality (1,854).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .commitlog import CommitStore
from .hypercentrality import VC_COLUMNS, centrality_features
from .process_metrics import SCALAR_COLUMNS, scalar_metrics_table
from .vector_metrics import VECTOR_METRICS, vector_columns, vector_metrics_table

logger = logging.getLogger(__name__)

PRODUCT_COLUMN_COUNT = 54
PATH_COLUMN = "File"
LABEL_COLUMN = "RealBug"
FEATURE_SETS = ("PR+SP", "PR+VP", "PR+VP+VC")


class FeatureSetError(Exception):
    """Base class for matrix assembly/export failures."""


class CorpusSchemaError(FeatureSetError):
    """Corpus file violates the File + 54 product columns + RealBug contract."""


class DuplicatePathError(FeatureSetError):
    """Same file appears twice in the corpus."""


class ExportError(FeatureSetError):
    """Matrix cannot be written (empty without force, or non-finite value)."""


@dataclass(frozen=True)
class ProductRecord:
    path: str
    values: tuple[float, ...]
    label: int


@dataclass
class Reconciliation:
    """Rows present in exactly one of the two joined sources."""

    corpus_only: list[str] = field(default_factory=list)
    computed_only: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.corpus_only or self.computed_only)

    def summary(self) -> str:
        return (
            f"{len(self.corpus_only)} corpus-only rows, "
            f"{len(self.computed_only)} history-only rows"
        )


@dataclass(eq=False)
class FeatureMatrix:
    release: str
    feature_set_id: str
    schema: list[str]
    rows: dict[str, list[float]]
    labels: dict[str, int]
    reconciliation: Reconciliation

    @property
    def width(self) -> int:
        return len(self.schema)


def _normalize(path: str, strip_prefix: str) -> str:
    path = path.replace("\\", "/")
    if strip_prefix and path.startswith(strip_prefix):
        path = path[len(strip_prefix) :]
    return path


def load_corpus(
    path: str | Path, strip_prefix: str = ""
) -> tuple[list[str], dict[str, ProductRecord]]:
    """Read the product-metric corpus CSV.

    Expects a File column, exactly 54 product-metric columns, and a
    RealBug label in {0,1}. ``strip_prefix`` reconciles corpus path
    conventions with repository-relative paths.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        if PATH_COLUMN not in names or LABEL_COLUMN not in names:
            raise CorpusSchemaError(
                f"corpus {path}: header must contain {PATH_COLUMN!r} and {LABEL_COLUMN!r}"
            )
        product_columns = [c for c in names if c not in (PATH_COLUMN, LABEL_COLUMN)]
        if len(product_columns) != PRODUCT_COLUMN_COUNT:
            raise CorpusSchemaError(
                f"corpus {path}: expected {PRODUCT_COLUMN_COUNT} product columns, "
                f"found {len(product_columns)}"
            )
        records: dict[str, ProductRecord] = {}
        for line, row in enumerate(reader, 2):
            file_path = _normalize(row[PATH_COLUMN], strip_prefix)
            if file_path in records:
                raise DuplicatePathError(f"corpus {path}: duplicate file {file_path}")
            try:
                values = tuple(float(row[c]) for c in product_columns)
            except (TypeError, ValueError) as exc:
                raise CorpusSchemaError(
                    f"corpus {path} line {line}: non-numeric product value"
                ) from exc
            try:
                label = int(float(row[LABEL_COLUMN]))
            except (TypeError, ValueError) as exc:
                raise CorpusSchemaError(
                    f"corpus {path} line {line}: bad label {row[LABEL_COLUMN]!r}"
                ) from exc
            if label not in (0, 1):
                raise CorpusSchemaError(
                    f"corpus {path} line {line}: label must be 0 or 1"
                )
            records[file_path] = ProductRecord(file_path, values, label)
    return product_columns, records


def compute_features(
    store: CommitStore, release: str, feature_set: str
) -> tuple[list[str], dict[str, list[float]]]:
    """Mined feature block (column names, per-file values) for one window."""
    if feature_set not in FEATURE_SETS:
        raise FeatureSetError(f"unknown feature set: {feature_set!r}")
    paths = store.touched_files(release)
    columns: list[str] = []
    rows: dict[str, list[float]] = {p: [] for p in paths}

    if feature_set == "PR+SP":
        columns.extend(SCALAR_COLUMNS)
        scalars = scalar_metrics_table(store, release)
        for p in paths:
            rows[p].extend(scalars[p].as_row())
        return columns, rows

    columns.extend(vector_columns(store.max_commit_size))
    vectors = vector_metrics_table(store, release)
    for p in paths:
        for metric in VECTOR_METRICS:
            rows[p].extend(float(v) for v in vectors[p][metric].slots)
    if feature_set == "PR+VP+VC":
        columns.extend(VC_COLUMNS)
        block = centrality_features(store, release)
        for p in paths:
            rows[p].extend(float(v) for v in block[p])
    return columns, rows


def join(
    product: tuple[list[str], dict[str, ProductRecord]],
    computed: tuple[list[str], dict[str, list[float]]],
    release: str,
    feature_set_id: str,
) -> FeatureMatrix:
    """Inner join on normalized path; one-sided rows go to reconciliation."""
    product_columns, records = product
    feature_columns, feature_rows = computed
    schema = list(product_columns) + list(feature_columns)
    common = sorted(set(records) & set(feature_rows))
    reconciliation = Reconciliation(
        corpus_only=sorted(set(records) - set(feature_rows)),
        computed_only=sorted(set(feature_rows) - set(records)),
    )
    rows = {p: list(records[p].values) + feature_rows[p] for p in common}
    labels = {p: records[p].label for p in common}
    if reconciliation:
        logger.warning("join %s/%s: %s", release, feature_set_id, reconciliation.summary())
    return FeatureMatrix(
        release=release,
        feature_set_id=feature_set_id,
        schema=schema,
        rows=rows,
        labels=labels,
        reconciliation=reconciliation,
    )


def build_matrix(
    store: CommitStore,
    corpus_path: str | Path,
    release: str,
    feature_set: str,
    strip_prefix: str = "",
) -> FeatureMatrix:
    product = load_corpus(corpus_path, strip_prefix=strip_prefix)
    computed = compute_features(store, release, feature_set)
    return join(product, computed, release, feature_set)


def export(matrix: FeatureMatrix, destination: str | Path, force: bool = False) -> Path:
    """Write ``path,label,<features...>`` CSV, rows path-lexicographic.

    Values are rendered with 12 significant digits, so identical matrices
    export byte-identically. Non-finite values are refused with the
    offending row and column named.
    """
    if not matrix.rows and not force:
        raise ExportError("refusing to export an empty matrix (use force to override)")
    destination = Path(destination)
    for path in matrix.rows:
        for j, value in enumerate(matrix.rows[path]):
            if not math.isfinite(value):
                raise ExportError(
                    f"non-finite value at row {path!r}, column {matrix.schema[j]!r}"
                )
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label", *matrix.schema])
        for path in sorted(matrix.rows):
            rendered = ["%.12g" % v for v in matrix.rows[path]]
            writer.writerow([path, matrix.labels[path], *rendered])
    return destination
