"""Scalar process metrics per file and release window.

Fourteen metrics: commit count, active/lifetime developers, normalized
added/deleted lines, ownership, minor contributors, owner/average
experience, change scattering, and their co-change-neighborhood
aggregates. A shared WindowContext caches the window-wide denominators
so per-file evaluation stays linear in the window size.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

from .cochange import PairwiseGraph, build_pairwise
from .commitlog import CommitStore, FileChangeHistory, history_of

# Ownership-literature standard: a contributor is minor strictly below 5%.
MINOR_SHARE_THRESHOLD = 0.05

# Canonical metric order; every tabular output follows it.
SCALAR_COLUMNS = (
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


class MetricError(Exception):
    """Base class for metric-computation failures."""


class NotComputedError(MetricError):
    """Requested a metric for a file not changed in the release window."""


@dataclass(frozen=True)
class ScalarMetrics:
    comm: int
    adev: int
    ddev: int
    add: float
    del_: float
    own: float
    minor: int
    oexp: float
    exp: float
    sctr: float
    ncomm: float
    nadev: float
    nddev: float
    nsctr: float

    def as_row(self) -> list[float]:
        """Values in SCALAR_COLUMNS order."""
        return [
            float(self.comm),
            float(self.adev),
            float(self.ddev),
            self.add,
            self.del_,
            self.own,
            self.oexp,
            self.exp,
            float(self.minor),
            self.sctr,
            self.ncomm,
            self.nadev,
            self.nddev,
            self.nsctr,
        ]


def entropy_of_window(changes: Mapping[str, float] | Iterable[float]) -> float:
    """Normalized Shannon entropy of per-file changed-line shares.

    H = -sum(q log q) / log(n) over files with positive share; n is the
    count of such files. All-zero input (and n <= 1) gives 0.
    """
    values = changes.values() if isinstance(changes, Mapping) else changes
    positive = [float(v) for v in values if v > 0]
    n = len(positive)
    if n <= 1:
        return 0.0
    total = math.fsum(positive)
    h = -math.fsum((v / total) * math.log(v / total) for v in positive) / math.log(n)
    # guard the float dust so H stays inside [0, 1]
    return min(1.0, max(0.0, h))


def geometric_mean(values: Iterable[float]) -> float:
    """Geometric mean of the positive entries; 0 when none are positive."""
    positive = [float(v) for v in values if v > 0]
    if not positive:
        return 0.0
    return math.exp(math.fsum(math.log(v) for v in positive) / len(positive))


def developer_lines(history: FileChangeHistory) -> dict[str, int]:
    """Changed lines (added+deleted) on the file per developer, window-scoped."""
    lines: dict[str, int] = defaultdict(int)
    for commit in history.commits:
        lines[commit.author] += history.delta(commit).changed
    return dict(lines)


def owner_of(dev_lines: Mapping[str, int]) -> str | None:
    """Developer with the largest share; ties broken lexicographically.

    None when nobody changed a line (all deltas 0/0).
    """
    candidates = [(lines, dev) for dev, lines in dev_lines.items() if lines > 0]
    if not candidates:
        return None
    best = max(lines for lines, _ in candidates)
    return min(dev for lines, dev in candidates if lines == best)


class WindowContext:
    """Window-wide aggregates shared by the scalar and vector metrics.

    Holds per-file histories, churn totals, per-commit-size strata with
    their entropies, and cumulative per-developer experience up to and
    including the target window.
    """

    def __init__(self, store: CommitStore, release: str):
        self.store = store
        self.release = release
        self.window_commits = store.window_commits(release)
        self.n_commits = len(self.window_commits)
        self.paths = store.touched_files(release)
        self.histories = {p: history_of(store, release, p) for p in self.paths}

        self.file_lines: dict[str, int] = defaultdict(int)
        self.total_added = 0
        self.total_deleted = 0
        self.commits_by_size: dict[int, list] = defaultdict(list)
        self.size_file_lines: dict[int, dict[str, int]] = defaultdict(
            lambda: defaultdict(int)
        )
        for commit in self.window_commits:
            size = store.commit_size(commit)
            self.commits_by_size[size].append(commit)
            for delta in store.source_deltas(commit):
                self.file_lines[delta.path] += delta.changed
                self.size_file_lines[size][delta.path] += delta.changed
                self.total_added += delta.added
                self.total_deleted += delta.deleted

        self.entropy = entropy_of_window(self.file_lines)
        self.size_entropy = {
            size: entropy_of_window(per_file)
            for size, per_file in self.size_file_lines.items()
        }

        # cumulative experience: lines changed anywhere in the project,
        # overall and stratified by commit size
        self.dev_project_lines: dict[str, int] = defaultdict(int)
        self.dev_project_lines_by_size: dict[str, dict[int, int]] = defaultdict(
            lambda: defaultdict(int)
        )
        for commit in store.cumulative_commits(release):
            size = store.commit_size(commit)
            lines = sum(d.changed for d in store.source_deltas(commit))
            self.dev_project_lines[commit.author] += lines
            self.dev_project_lines_by_size[commit.author][size] += lines

        self.pairwise = build_pairwise(store, release)
        self._base: dict[str, dict[str, float]] = {}

    def history(self, path: str) -> FileChangeHistory:
        try:
            return self.histories[path]
        except KeyError:
            raise NotComputedError(
                f"{path} not changed in release {self.release!r}"
            ) from None

    def base_scalars(self, path: str) -> dict[str, float]:
        """The ten non-neighborhood metrics, cached per file."""
        if path in self._base:
            return self._base[path]
        history = self.history(path)
        comm = len(history.commits)
        window_devs = {c.author for c in history.commits}
        added = sum(history.delta(c).added for c in history.commits)
        deleted = sum(history.delta(c).deleted for c in history.commits)

        dev_lines = developer_lines(history)
        total_lines = sum(dev_lines.values())
        owner = owner_of(dev_lines)
        if total_lines > 0:
            own = max(dev_lines.values()) / total_lines
            minor = sum(
                1
                for lines in dev_lines.values()
                if 0 < lines / total_lines < MINOR_SHARE_THRESHOLD
            )
        else:
            own, minor = 0.0, 0

        base = {
            "COMM": float(comm),
            "ADEV": float(len(window_devs)),
            "DDEV": float(len({c.author for c in history.cumulative})),
            "ADD": added / max(1, self.total_added),
            "DEL": deleted / max(1, self.total_deleted),
            "OWN": own,
            "OEXP": float(self.dev_project_lines.get(owner, 0)) if owner else 0.0,
            "EXP": geometric_mean(
                self.dev_project_lines.get(d, 0) for d in window_devs
            ),
            "MINOR": float(minor),
            "SCTR": (comm / self.n_commits) * self.entropy if self.n_commits else 0.0,
        }
        self._base[path] = base
        return base


@lru_cache(maxsize=16)
def window_context(store: CommitStore, release: str) -> WindowContext:
    return WindowContext(store, release)


def _neighborhood_mean(
    ctx: WindowContext, neighbors: Mapping[str, int], key: str
) -> float:
    # weighted mean over co-change neighbors; isolated files get 0
    total_weight = sum(neighbors.values())
    if total_weight <= 0:
        return 0.0
    weighted = sum(w * ctx.base_scalars(n)[key] for n, w in neighbors.items())
    return weighted / total_weight


def scalar_metrics(
    history: FileChangeHistory, cochange: PairwiseGraph | None = None
) -> ScalarMetrics:
    """All fourteen scalar metrics for one file in one release window.

    ``cochange`` defaults to the window's own pairwise graph; passing one
    in lets callers reuse a prebuilt graph.
    """
    if not history.commits:
        raise NotComputedError(
            f"{history.path} not changed in release {history.release!r}"
        )
    ctx = window_context(history.store, history.release)
    base = ctx.base_scalars(history.path)
    graph = cochange if cochange is not None else ctx.pairwise
    neighbors = graph.neighbors(history.path)
    return ScalarMetrics(
        comm=int(base["COMM"]),
        adev=int(base["ADEV"]),
        ddev=int(base["DDEV"]),
        add=base["ADD"],
        del_=base["DEL"],
        own=base["OWN"],
        minor=int(base["MINOR"]),
        oexp=base["OEXP"],
        exp=base["EXP"],
        sctr=base["SCTR"],
        ncomm=_neighborhood_mean(ctx, neighbors, "COMM"),
        nadev=_neighborhood_mean(ctx, neighbors, "ADEV"),
        nddev=_neighborhood_mean(ctx, neighbors, "DDEV"),
        nsctr=_neighborhood_mean(ctx, neighbors, "SCTR"),
    )


def scalar_metrics_table(store: CommitStore, release: str) -> dict[str, ScalarMetrics]:
    """Scalar metrics for every file touched in the window."""
    ctx = window_context(store, release)
    return {
        path: scalar_metrics(ctx.histories[path], ctx.pairwise) for path in ctx.paths
    }
