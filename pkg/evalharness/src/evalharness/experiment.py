"""Out-of-sample bootstrap evaluation over aligned feature tables.

One index vector is drawn per resample and shared by every feature set,
so per-resample scores are paired across feature sets. Oversampling and
feature screening happen strictly on the train split; the out-of-bag
rows are scored untouched.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .dataset import FeatureTable, align_feature_tables, load_feature_table
from .models import CLASSIFIER_IDS, fit_predict_probability
from .resampling import draw_bootstrap, smote_balance
from .scoring import METRICS, classification_scores
from .selection import hsic_select

log = logging.getLogger(__name__)

DEFAULT_RESAMPLES = 100
DEFAULT_K_FEATURES = 40
MAX_REDRAWS = 25


class ExperimentError(Exception):
    """The evaluation protocol cannot proceed."""


class SpecError(ExperimentError):
    """An experiment description violates its invariants."""


class ResampleExhaustedError(ExperimentError):
    """Redrawing never produced a two-class train split."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one project's evaluation."""

    project: str
    matrices: Mapping[str, str | Path]  # feature set id -> exported CSV
    classifiers: tuple[str, ...] = CLASSIFIER_IDS
    resamples: int = DEFAULT_RESAMPLES
    k_features: int = DEFAULT_K_FEATURES
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.project:
            raise SpecError("project name must be non-empty")
        if not self.matrices:
            raise SpecError("at least one feature matrix is required")
        if not self.classifiers:
            raise SpecError("at least one classifier is required")
        unknown = [c for c in self.classifiers if c not in CLASSIFIER_IDS]
        if unknown:
            raise SpecError(f"unknown classifiers: {', '.join(unknown)}")
        if len(set(self.classifiers)) != len(self.classifiers):
            raise SpecError("duplicate classifier ids")
        if self.resamples < 1:
            raise SpecError("resamples must be at least 1")
        if self.k_features < 1:
            raise SpecError("k_features must be at least 1")


@dataclass
class ResultTable:
    """Per-resample scores for every (project, classifier, feature set, metric).

    ``scores`` keeps the raw per-resample values; ``mean``/``std`` reduce
    them on demand. ``completed`` counts resamples that produced scores
    (degenerate draws are skipped, not imputed).
    """

    projects: tuple[str, ...]
    classifiers: tuple[str, ...]
    feature_sets: tuple[str, ...]
    metrics: tuple[str, ...]
    scores: dict[tuple[str, str, str, str], tuple[float, ...]]
    completed: dict[str, int]
    skipped: dict[str, int]

    def raw(self, project: str, classifier: str, feature_set: str, metric: str) -> tuple[float, ...]:
        return self.scores[(project, classifier, feature_set, metric)]

    def mean(self, project: str, classifier: str, feature_set: str, metric: str) -> float:
        return float(np.mean(self.raw(project, classifier, feature_set, metric)))

    def std(self, project: str, classifier: str, feature_set: str, metric: str) -> float:
        values = self.raw(project, classifier, feature_set, metric)
        if len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1))

    def rows(self):
        """Yield (project, classifier, feature_set, metric, mean, std) in stable order."""
        for project in self.projects:
            for classifier in self.classifiers:
                for feature_set in self.feature_sets:
                    for metric in self.metrics:
                        yield (
                            project,
                            classifier,
                            feature_set,
                            metric,
                            self.mean(project, classifier, feature_set, metric),
                            self.std(project, classifier, feature_set, metric),
                        )

    def to_csv(self, destination: str | Path) -> Path:
        destination = Path(destination)
        with open(destination, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["project", "classifier", "feature_set", "metric", "mean", "std"])
            for project, classifier, feature_set, metric, mean, std in self.rows():
                writer.writerow([project, classifier, feature_set, metric, "%.12g" % mean, "%.12g" % std])
        return destination

    def raw_to_csv(self, destination: str | Path) -> Path:
        destination = Path(destination)
        with open(destination, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["project", "classifier", "feature_set", "metric", "resample", "score"])
            for project in self.projects:
                for classifier in self.classifiers:
                    for feature_set in self.feature_sets:
                        for metric in self.metrics:
                            values = self.raw(project, classifier, feature_set, metric)
                            for r, value in enumerate(values):
                                writer.writerow(
                                    [project, classifier, feature_set, metric, r, "%.12g" % value]
                                )
        return destination

    @classmethod
    def merge(cls, tables: list["ResultTable"]) -> "ResultTable":
        """Concatenate tables from disjoint projects (same classifier/feature-set axes)."""
        if not tables:
            raise ExperimentError("nothing to merge")
        first = tables[0]
        projects: list[str] = []
        scores: dict[tuple[str, str, str, str], tuple[float, ...]] = {}
        completed: dict[str, int] = {}
        skipped: dict[str, int] = {}
        for table in tables:
            if table.classifiers != first.classifiers or table.feature_sets != first.feature_sets:
                raise ExperimentError("cannot merge tables with different classifier/feature-set axes")
            for project in table.projects:
                if project in completed:
                    raise ExperimentError(f"duplicate project {project!r} in merge")
                projects.append(project)
                completed[project] = table.completed[project]
                skipped[project] = table.skipped[project]
            scores.update(table.scores)
        return cls(
            tuple(projects), first.classifiers, first.feature_sets, first.metrics,
            scores, completed, skipped,
        )


def _load_tables(spec: ExperimentSpec) -> dict[str, FeatureTable]:
    tables = {
        fs_id: load_feature_table(path, fs_id) for fs_id, path in spec.matrices.items()
    }
    return align_feature_tables(tables)


def bootstrap_evaluate(
    spec: ExperimentSpec,
    file_score_sink: dict | None = None,
) -> ResultTable:
    """Run the full protocol for one project and return its result table.

    Per resample: draw n rows with replacement as train, score on the
    out-of-bag remainder; oversample the train minority class to balance;
    screen down to min(k_features, width) columns; fit every classifier;
    collect the five scores. Resamples whose out-of-bag split is empty or
    single-class are skipped with a warning; a single-class *train* draw
    is redrawn (bounded, then an error). Results are bit-for-bit
    reproducible for a fixed seed, independent of execution order,
    because every resample seeds its own substreams.

    ``file_score_sink``, when given, is filled with
    (classifier, feature_set) -> {path: mean out-of-bag probability}.
    """
    tables = _load_tables(spec)
    feature_sets = tuple(tables)
    reference = tables[feature_sets[0]]
    labels = reference.labels
    n = len(reference)

    accumulator: dict[tuple[str, str, str], list[float]] = {
        (classifier, fs, metric): []
        for classifier in spec.classifiers
        for fs in feature_sets
        for metric in METRICS
    }
    sink_sums: dict[tuple[str, str], dict[str, list[float]]] = {}
    if file_score_sink is not None:
        sink_sums = {
            (classifier, fs): {}
            for classifier in spec.classifiers
            for fs in feature_sets
        }

    completed = 0
    skipped = 0
    for r in range(spec.resamples):
        draw_rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(r, 0)))
        train = oob = None
        for _ in range(MAX_REDRAWS + 1):
            candidate_train, candidate_oob = draw_bootstrap(n, draw_rng)
            if len(candidate_oob) == 0:
                break  # degenerate draw; skip this resample entirely
            if len(np.unique(labels[candidate_train])) < 2:
                continue  # single-class train: redraw
            train, oob = candidate_train, candidate_oob
            break
        else:
            raise ResampleExhaustedError(
                f"resample {r}: no two-class train split after {MAX_REDRAWS} redraws"
            )
        if train is None:
            log.warning("resample %d: empty out-of-bag split, skipped", r)
            skipped += 1
            continue
        if len(np.unique(labels[oob])) < 2:
            log.warning("resample %d: single-class out-of-bag split, skipped", r)
            skipped += 1
            continue

        model_seed = int(
            np.random.SeedSequence(spec.seed, spawn_key=(r, 2)).generate_state(1)[0]
        )
        test_labels = labels[oob]
        for fs in feature_sets:
            matrix = tables[fs].matrix
            # Fresh, identically-keyed stream per feature set: identical
            # inputs then yield identical synthetic rows, keeping the
            # comparison across feature sets paired.
            smote_rng = np.random.default_rng(
                np.random.SeedSequence(spec.seed, spawn_key=(r, 1))
            )
            train_features, train_labels = smote_balance(matrix[train], labels[train], smote_rng)
            picked = hsic_select(train_features, train_labels, spec.k_features)
            fitted_train = train_features[:, picked]
            fitted_test = matrix[oob][:, picked]
            for classifier in spec.classifiers:
                probabilities = fit_predict_probability(
                    classifier, model_seed, fitted_train, train_labels, fitted_test
                )
                for metric, value in classification_scores(test_labels, probabilities).items():
                    accumulator[(classifier, fs, metric)].append(value)
                if file_score_sink is not None:
                    bucket = sink_sums[(classifier, fs)]
                    for row, probability in zip(oob, probabilities):
                        bucket.setdefault(reference.paths[row], []).append(float(probability))
        completed += 1

    if completed == 0:
        raise ExperimentError(
            f"project {spec.project!r}: every resample was skipped; dataset too small"
        )
    if skipped:
        log.warning(
            "project %s: %d of %d resamples skipped", spec.project, skipped, spec.resamples
        )

    if file_score_sink is not None:
        for key, per_path in sink_sums.items():
            file_score_sink[key] = {
                path: float(np.mean(values)) for path, values in per_path.items()
            }

    scores = {
        (spec.project, classifier, fs, metric): tuple(values)
        for (classifier, fs, metric), values in accumulator.items()
    }
    return ResultTable(
        projects=(spec.project,),
        classifiers=spec.classifiers,
        feature_sets=feature_sets,
        metrics=METRICS,
        scores=scores,
        completed={spec.project: completed},
        skipped={spec.project: skipped},
    )
