"""Commit-size-aware vector process metrics.

Each scalar process metric is expanded into a profile over commit-size
strata: slot i (1-based) holds the contribution of commits that changed
exactly i source files. Sizes never observed stay exactly 0, so every
file in a release shares one fixed-width layout (default 100 slots,
giving 1,400 vector features across the 14 metrics).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .cochange import PairwiseGraph
from .commitlog import CommitStore, FileChangeHistory
from .process_metrics import (
    MINOR_SHARE_THRESHOLD,
    NotComputedError,
    WindowContext,
    developer_lines,
    geometric_mean,
    owner_of,
    window_context,
)

# Canonical metric order for the vector feature block.
VECTOR_METRICS = (
    "COMM",
    "ADEV",
    "DDEV",
    "ADD",
    "DEL",
    "OWN",
    "OEXP",
    "EXP",
    "MINOR",
    "SCTR",
    "NCOMM",
    "NADEV",
    "NDDEV",
    "NSCTR",
)


@dataclass(frozen=True, eq=False)
class MetricVector:
    """One metric's per-commit-size profile; slots[i-1] is the size-i slot."""

    metric_id: str
    slots: np.ndarray

    def slot(self, i: int) -> float:
        return float(self.slots[i - 1])

    @property
    def total(self) -> float:
        return float(self.slots.sum())

    def __len__(self) -> int:
        return len(self.slots)


def _bins(history: FileChangeHistory) -> int:
    return history.store.max_commit_size


def _require_commits(history: FileChangeHistory) -> None:
    if not history.commits:
        raise NotComputedError(
            f"{history.path} not changed in release {history.release!r}"
        )


def commit_count_vector(history: FileChangeHistory) -> MetricVector:
    """Slot i = share of the file's window commits that have size i."""
    _require_commits(history)
    slots = np.zeros(_bins(history))
    comm = len(history.commits)
    for size, commits in history.buckets.items():
        slots[size - 1] = len(commits) / comm
    return MetricVector("COMM", slots)


def developer_activity_vectors(
    history: FileChangeHistory,
) -> tuple[MetricVector, MetricVector]:
    """Distinct-developer shares per size: window (ADEV), lifetime (DDEV)."""
    _require_commits(history)
    bins = _bins(history)
    store = history.store

    window_devs = {c.author for c in history.commits}
    adev = np.zeros(bins)
    for size, commits in history.buckets.items():
        adev[size - 1] = len({c.author for c in commits}) / len(window_devs)

    cumulative_devs = {c.author for c in history.cumulative}
    ddev = np.zeros(bins)
    by_size: dict[int, set[str]] = defaultdict(set)
    for commit in history.cumulative:
        by_size[store.commit_size(commit)].add(commit.author)
    for size, devs in by_size.items():
        ddev[size - 1] = len(devs) / len(cumulative_devs)
    return MetricVector("ADEV", adev), MetricVector("DDEV", ddev)


def line_delta_vectors(
    history: FileChangeHistory,
) -> tuple[MetricVector, MetricVector]:
    """Added/deleted-line shares per size; all-zero when the file had none."""
    _require_commits(history)
    bins = _bins(history)
    added = np.zeros(bins)
    deleted = np.zeros(bins)
    for size, commits in history.buckets.items():
        added[size - 1] = sum(history.delta(c).added for c in commits)
        deleted[size - 1] = sum(history.delta(c).deleted for c in commits)
    total_added = added.sum()
    total_deleted = deleted.sum()
    add = added / total_added if total_added > 0 else np.zeros(bins)
    del_ = deleted / total_deleted if total_deleted > 0 else np.zeros(bins)
    return MetricVector("ADD", add), MetricVector("DEL", del_)


def ownership_vectors(
    history: FileChangeHistory,
) -> tuple[MetricVector, MetricVector]:
    """Owner's line shares per size: on the file (OWN), project-wide (OEXP).

    The owner is fixed by the window (max changed lines on the file, ties
    to the lexicographically smallest identity); OEXP stratifies the
    owner's cumulative project lines by the sizes of the commits that
    produced them.
    """
    _require_commits(history)
    bins = _bins(history)
    owner = owner_of(developer_lines(history))
    own = np.zeros(bins)
    oexp = np.zeros(bins)
    if owner is None:
        return MetricVector("OWN", own), MetricVector("OEXP", oexp)

    for size, commits in history.buckets.items():
        own[size - 1] = sum(
            history.delta(c).changed for c in commits if c.author == owner
        )
    own_total = own.sum()
    own = own / own_total if own_total > 0 else np.zeros(bins)

    ctx = window_context(history.store, history.release)
    by_size = ctx.dev_project_lines_by_size.get(owner, {})
    for size, lines in by_size.items():
        oexp[size - 1] = lines
    oexp_total = oexp.sum()
    oexp = oexp / oexp_total if oexp_total > 0 else np.zeros(bins)
    return MetricVector("OWN", own), MetricVector("OEXP", oexp)


def experience_vector(history: FileChangeHistory) -> MetricVector:
    """Slot i = geometric mean of developers' size-i share of their own
    window activity on the file; zero-line developers drop out."""
    _require_commits(history)
    bins = _bins(history)
    totals = developer_lines(history)
    slots = np.zeros(bins)
    for size, commits in history.buckets.items():
        per_dev: dict[str, int] = defaultdict(int)
        for commit in commits:
            per_dev[commit.author] += history.delta(commit).changed
        ratios = [
            lines / totals[dev]
            for dev, lines in per_dev.items()
            if lines > 0 and totals.get(dev, 0) > 0
        ]
        if ratios:
            slots[size - 1] = geometric_mean(ratios)
    return MetricVector("EXP", slots)


def minor_vector(history: FileChangeHistory) -> MetricVector:
    """Slot i = share of the file's minor contributors who are also minor
    (positive share < 5%) within the size-i stratum."""
    _require_commits(history)
    bins = _bins(history)
    slots = np.zeros(bins)
    totals = developer_lines(history)
    grand_total = sum(totals.values())
    if grand_total <= 0:
        return MetricVector("MINOR", slots)
    minors = {
        dev
        for dev, lines in totals.items()
        if 0 < lines / grand_total < MINOR_SHARE_THRESHOLD
    }
    if not minors:
        return MetricVector("MINOR", slots)

    for size, commits in history.buckets.items():
        per_dev: dict[str, int] = defaultdict(int)
        for commit in commits:
            per_dev[commit.author] += history.delta(commit).changed
        stratum_total = sum(per_dev.values())
        if stratum_total <= 0:
            continue
        stratum_minors = sum(
            1
            for dev in minors
            if 0 < per_dev.get(dev, 0) / stratum_total < MINOR_SHARE_THRESHOLD
        )
        slots[size - 1] = stratum_minors / len(minors)
    return MetricVector("MINOR", slots)


def sctr_vector(window: WindowContext, target: str) -> MetricVector:
    """Slot i = (share of size-i window commits touching the file) times the
    size-i stratum's change entropy; strata with no commits stay 0."""
    history = window.history(target)
    _require_commits(history)
    slots = np.zeros(window.store.max_commit_size)
    for size, commits in window.commits_by_size.items():
        touching = len(history.buckets.get(size, ()))
        if touching == 0:
            continue
        slots[size - 1] = (touching / len(commits)) * window.size_entropy[size]
    return MetricVector("SCTR", slots)


def neighborhood_vectors(
    target: str,
    base: str,
    graph: PairwiseGraph,
    vectors: Mapping[str, MetricVector],
) -> MetricVector:
    """Co-change-weighted aggregate of the neighbors' base vectors.

    Slot-wise (sum_n w_n * V_n) / (sum_n w_n * |V_n|_1); isolated files
    and all-zero neighborhoods yield the zero vector.
    """
    if base not in {"COMM", "ADEV", "DDEV", "SCTR"}:
        raise ValueError(f"unsupported neighborhood base metric: {base}")
    neighbors = graph.neighbors(target)
    metric_id = f"N{base}"
    first = next(iter(vectors.values()), None)
    bins = len(first.slots) if first is not None else 0
    if not neighbors or first is None:
        return MetricVector(metric_id, np.zeros(bins))
    numerator = np.zeros(bins)
    denominator = 0.0
    for neighbor, weight in neighbors.items():
        vec = vectors[neighbor]
        numerator += weight * vec.slots
        denominator += weight * float(np.abs(vec.slots).sum())
    if denominator <= 0:
        return MetricVector(metric_id, np.zeros(bins))
    return MetricVector(metric_id, numerator / denominator)


def vector_metrics_table(
    store: CommitStore, release: str
) -> dict[str, dict[str, MetricVector]]:
    """All 14 vectors for every touched file of the window."""
    ctx = window_context(store, release)
    table: dict[str, dict[str, MetricVector]] = {}
    for path in ctx.paths:
        history = ctx.histories[path]
        adev, ddev = developer_activity_vectors(history)
        add, del_ = line_delta_vectors(history)
        own, oexp = ownership_vectors(history)
        table[path] = {
            "COMM": commit_count_vector(history),
            "ADEV": adev,
            "DDEV": ddev,
            "ADD": add,
            "DEL": del_,
            "OWN": own,
            "OEXP": oexp,
            "EXP": experience_vector(history),
            "MINOR": minor_vector(history),
            "SCTR": sctr_vector(ctx, path),
        }
    for base in ("COMM", "ADEV", "DDEV", "SCTR"):
        base_vectors = {path: table[path][base] for path in table}
        for path in table:
            table[path][f"N{base}"] = neighborhood_vectors(
                path, base, ctx.pairwise, base_vectors
            )
    return table


def vector_columns(bins: int) -> list[str]:
    """Column names V_<METRIC>_<size>, size zero-padded to three digits."""
    return [f"V_{m}_{i:03d}" for m in VECTOR_METRICS for i in range(1, bins + 1)]
