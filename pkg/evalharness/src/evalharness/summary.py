"""Aggregation of result tables into comparison tables, tests, and plots.

Works from the results CSV contract (``project,classifier,feature_set,
metric,mean,std``) so it can merge runs produced separately, one project
at a time.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .scoring import HIGHER_IS_BETTER, METRICS, RankCurve, rank_metrics  # noqa: E402
from .stats import DegenerateTestError, RankComparison, friedman_nemenyi  # noqa: E402

log = logging.getLogger(__name__)

RESULTS_HEADER = ("project", "classifier", "feature_set", "metric", "mean", "std")
SCORES_HEADER = ("project", "classifier", "feature_set", "path", "label", "score")


class SummaryError(Exception):
    """Result files cannot be aggregated."""


def read_results_csv(source: str | Path) -> dict[tuple[str, str, str, str], tuple[float, float]]:
    """Parse one results CSV into {(project, classifier, feature_set, metric): (mean, std)}."""
    source = Path(source)
    out: dict[tuple[str, str, str, str], tuple[float, float]] = {}
    try:
        fh = open(source, newline="")
    except OSError as exc:
        raise SummaryError(f"cannot read results {source}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RESULTS_HEADER:
            raise SummaryError(f"{source}: expected header {','.join(RESULTS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise SummaryError(f"{source}:{lineno}: expected 6 fields, got {len(row)}")
            key = (row[0], row[1], row[2], row[3])
            if row[3] not in METRICS:
                raise SummaryError(f"{source}:{lineno}: unknown metric {row[3]!r}")
            if key in out:
                raise SummaryError(f"{source}:{lineno}: duplicate row for {key}")
            try:
                out[key] = (float(row[4]), float(row[5]))
            except ValueError as exc:
                raise SummaryError(f"{source}:{lineno}: {exc}") from None
    if not out:
        raise SummaryError(f"{source}: no result rows")
    return out


def merge_results(sources: list[str | Path]) -> dict[tuple[str, str, str, str], tuple[float, float]]:
    merged: dict[tuple[str, str, str, str], tuple[float, float]] = {}
    for source in sources:
        part = read_results_csv(source)
        clash = set(part) & set(merged)
        if clash:
            raise SummaryError(f"duplicate result rows across files, e.g. {sorted(clash)[0]}")
        merged.update(part)
    return merged


def read_scores_csv(source: str | Path) -> list[dict]:
    """Parse a per-file score CSV (long format) into row dicts."""
    source = Path(source)
    rows: list[dict] = []
    try:
        fh = open(source, newline="")
    except OSError as exc:
        raise SummaryError(f"cannot read scores {source}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SCORES_HEADER:
            raise SummaryError(f"{source}: expected header {','.join(SCORES_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise SummaryError(f"{source}:{lineno}: expected 6 fields, got {len(row)}")
            if row[4] not in ("0", "1"):
                raise SummaryError(f"{source}:{lineno}: label must be 0 or 1")
            try:
                score = float(row[5])
            except ValueError as exc:
                raise SummaryError(f"{source}:{lineno}: {exc}") from None
            rows.append(
                {
                    "project": row[0],
                    "classifier": row[1],
                    "feature_set": row[2],
                    "path": row[3],
                    "label": int(row[4]),
                    "score": score,
                }
            )
    if not rows:
        raise SummaryError(f"{source}: no score rows")
    return rows


def _axes(results) -> tuple[list[str], list[str], list[str]]:
    """Distinct projects / classifiers / feature sets, in first-seen order."""
    projects: list[str] = []
    classifiers: list[str] = []
    feature_sets: list[str] = []
    for project, classifier, feature_set, _metric in results:
        if project not in projects:
            projects.append(project)
        if classifier not in classifiers:
            classifiers.append(classifier)
        if feature_set not in feature_sets:
            feature_sets.append(feature_set)
    return projects, classifiers, feature_sets


def complete_cells(results, metric: str, feature_sets: list[str]) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """(cells with every feature set present, all cells seen) for one metric."""
    projects, classifiers, _ = _axes(results)
    seen: list[tuple[str, str]] = []
    complete: list[tuple[str, str]] = []
    for project in projects:
        for classifier in classifiers:
            present = [fs for fs in feature_sets if (project, classifier, fs, metric) in results]
            if present:
                seen.append((project, classifier))
            if len(present) == len(feature_sets):
                complete.append((project, classifier))
    return complete, seen


def best_performer_shares(results, metric: str, feature_sets: list[str]) -> dict[str, float]:
    """Fraction of complete cells where each feature set is best; exact ties split the credit."""
    cells, _ = complete_cells(results, metric, feature_sets)
    if not cells:
        return {fs: 0.0 for fs in feature_sets}
    higher = HIGHER_IS_BETTER[metric]
    credit = {fs: 0.0 for fs in feature_sets}
    for project, classifier in cells:
        values = {fs: results[(project, classifier, fs, metric)][0] for fs in feature_sets}
        best = max(values.values()) if higher else min(values.values())
        winners = [fs for fs, v in values.items() if v == best]
        for fs in winners:
            credit[fs] += 1.0 / len(winners)
    return {fs: credit[fs] / len(cells) for fs in feature_sets}


def percentage_differences(
    results, metric: str, baseline: str, feature_sets: list[str]
) -> dict[str, list[float]]:
    """Per-cell percent change of each non-baseline feature set against the baseline."""
    cells, _ = complete_cells(results, metric, feature_sets)
    out: dict[str, list[float]] = {fs: [] for fs in feature_sets if fs != baseline}
    for project, classifier in cells:
        base = results[(project, classifier, baseline, metric)][0]
        if base == 0.0:
            log.warning("cell (%s, %s): baseline %s is 0, excluded from %% differences",
                        project, classifier, metric)
            continue
        for fs in out:
            value = results[(project, classifier, fs, metric)][0]
            out[fs].append(100.0 * (value - base) / base)
    return out


def paired_matrix(results, metric: str, feature_sets: list[str]):
    """(n_cells, n_feature_sets) mean-score matrix over complete cells."""
    cells, _ = complete_cells(results, metric, feature_sets)
    matrix = np.array(
        [
            [results[(project, classifier, fs, metric)][0] for fs in feature_sets]
            for project, classifier in cells
        ],
        dtype=float,
    )
    return matrix, cells


def mean_rank_curves(score_rows: list[dict], max_k: int = 100) -> dict[str, RankCurve]:
    """Average precision@k / recall@k per feature set over (project, classifier) groups."""
    groups: dict[tuple[str, str, str], dict] = {}
    for row in score_rows:
        key = (row["feature_set"], row["project"], row["classifier"])
        bucket = groups.setdefault(key, {"scores": {}, "labels": {}})
        bucket["scores"][row["path"]] = row["score"]
        bucket["labels"][row["path"]] = row["label"]

    by_feature_set: dict[str, list[RankCurve]] = {}
    for (feature_set, _project, _classifier), bucket in sorted(groups.items()):
        curve = rank_metrics(bucket["scores"], bucket["labels"], max_k=max_k)
        by_feature_set.setdefault(feature_set, []).append(curve)

    averaged: dict[str, RankCurve] = {}
    for feature_set, curves in by_feature_set.items():
        limit = min(len(c.ks) for c in curves)
        ks = tuple(range(1, limit + 1))
        precision = tuple(
            sum(c.precision[i] for c in curves) / len(curves) for i in range(limit)
        )
        recall = tuple(sum(c.recall[i] for c in curves) / len(curves) for i in range(limit))
        averaged[feature_set] = RankCurve(
            ks, precision, recall, sum(c.defective_total for c in curves)
        )
    return averaged


@dataclass(frozen=True)
class SummaryReport:
    feature_sets: tuple[str, ...]
    baseline: str
    coverage: dict
    shares: dict
    pct_diff: dict
    tests: dict
    plots: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "feature_sets": list(self.feature_sets),
            "baseline": self.baseline,
            "coverage": self.coverage,
            "best_performer_shares": self.shares,
            "percentage_difference_vs_baseline": self.pct_diff,
            "rank_tests": self.tests,
            "plots": list(self.plots),
        }


def _box_plot(metric: str, per_fs: dict[str, list[float]], destination: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    names = list(per_fs)
    ax.boxplot([per_fs[fs] for fs in names], tick_labels=names)
    ax.set_title(f"{metric} across dataset-classifier pairs")
    ax.set_ylabel(metric)
    fig.tight_layout()
    fig.savefig(destination)
    plt.close(fig)


def _pie_plot(metric: str, shares: dict[str, float], destination: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    names = [fs for fs in shares if shares[fs] > 0]
    if names:
        ax.pie([shares[fs] for fs in names], labels=names, autopct="%.1f%%")
    ax.set_title(f"best {metric} share")
    fig.tight_layout()
    fig.savefig(destination)
    plt.close(fig)


def _cd_plot(metric: str, comparison: RankComparison, destination: Path) -> None:
    """Mean ranks on a number line, with the critical-distance ruler above."""
    fig, ax = plt.subplots(figsize=(6, 2.5))
    k = len(comparison.feature_sets)
    ax.set_xlim(0.5, k + 0.5)
    ax.set_ylim(0, 2.2)
    ax.spines[["left", "right", "top"]].set_visible(False)
    ax.get_yaxis().set_visible(False)
    ax.set_xlabel("mean rank (lower is better)")
    for name, rank in zip(comparison.feature_sets, comparison.mean_ranks):
        ax.plot([rank], [0.6], marker="o", color="black")
        ax.annotate(
            f"{name} ({rank:.2f})", (rank, 0.6), xytext=(rank, 1.1),
            ha="center", fontsize=8, rotation=30,
            arrowprops={"arrowstyle": "-", "lw": 0.5},
        )
    start = min(comparison.mean_ranks)
    ax.plot([start, start + comparison.critical_distance], [2.0, 2.0], lw=2, color="tab:red")
    ax.annotate(f"CD = {comparison.critical_distance:.3f}",
                (start + comparison.critical_distance / 2, 2.05), ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(destination)
    plt.close(fig)


def _curve_plot(kind: str, curves: dict[str, RankCurve], destination: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for feature_set, curve in curves.items():
        values = curve.precision if kind == "precision" else curve.recall
        ax.plot(curve.ks, values, label=feature_set)
    ax.set_xlabel("k")
    ax.set_ylabel(f"{kind}@k")
    ax.legend()
    fig.tight_layout()
    fig.savefig(destination)
    plt.close(fig)


def summarize(
    results,
    out_dir: str | Path,
    baseline: str | None = None,
    score_rows: list[dict] | None = None,
) -> SummaryReport:
    """Produce the comparison report and plot files under ``out_dir``.

    Missing cells are tolerated: every table is computed over the cells
    where all feature sets are present, and the coverage block says how
    many that was. Rank tests that cannot run (too few pairs) are
    recorded as skipped rather than failing the whole summary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, _, feature_sets = _axes(results)
    if not feature_sets:
        raise SummaryError("results contain no feature sets")
    if baseline is None:
        baseline = "PR+SP" if "PR+SP" in feature_sets else feature_sets[0]
    if baseline not in feature_sets:
        raise SummaryError(f"baseline {baseline!r} not present in results")

    coverage: dict[str, dict] = {}
    shares: dict[str, dict] = {}
    pct_diff: dict[str, dict] = {}
    tests: dict[str, dict] = {}
    plots: list[str] = []

    for metric in METRICS:
        cells, seen = complete_cells(results, metric, feature_sets)
        if not seen:
            continue
        coverage[metric] = {"cells_used": len(cells), "cells_seen": len(seen)}
        if len(cells) < len(seen):
            log.warning(
                "%s: %d of %d cells missing a feature set; summarized over the rest",
                metric, len(seen) - len(cells), len(seen),
            )
        if not cells:
            continue
        shares[metric] = best_performer_shares(results, metric, feature_sets)
        pct_cells = percentage_differences(results, metric, baseline, feature_sets)
        pct_diff[metric] = {
            fs: {
                "mean": float(np.mean(values)) if values else None,
                "median": float(np.median(values)) if values else None,
            }
            for fs, values in pct_cells.items()
        }

        matrix, _ = paired_matrix(results, metric, feature_sets)
        try:
            comparison = friedman_nemenyi(
                matrix, tuple(feature_sets), higher_is_better=HIGHER_IS_BETTER[metric]
            )
            tests[metric] = comparison.as_dict()
            cd_file = out_dir / f"cd_{metric}.png"
            _cd_plot(metric, comparison, cd_file)
            plots.append(cd_file.name)
        except DegenerateTestError as exc:
            tests[metric] = {"skipped": str(exc)}

        per_fs = {
            fs: [results[(p, c, fs, metric)][0] for p, c in cells] for fs in feature_sets
        }
        box_file = out_dir / f"box_{metric}.png"
        _box_plot(metric, per_fs, box_file)
        plots.append(box_file.name)
        pie_file = out_dir / f"pie_{metric}.png"
        _pie_plot(metric, shares[metric], pie_file)
        plots.append(pie_file.name)

    if score_rows:
        curves = mean_rank_curves(score_rows)
        for kind in ("precision", "recall"):
            curve_file = out_dir / f"{kind}_at_k.png"
            _curve_plot(kind, curves, curve_file)
            plots.append(curve_file.name)

    report = SummaryReport(
        feature_sets=tuple(feature_sets),
        baseline=baseline,
        coverage=coverage,
        shares=shares,
        pct_diff=pct_diff,
        tests=tests,
        plots=tuple(plots),
    )
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
