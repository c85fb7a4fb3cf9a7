"""Canonical, release-windowed commit store.

Ingests line-delimited commit records (or extracts them from a git working
copy), filters out commits whose source-file count is outside [1, max],
and exposes per-file, per-release change histories that every downstream
metric reads.
"""

from __future__ import annotations

import json
import logging
import subprocess
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

logger = logging.getLogger(__name__)

DEFAULT_SOURCE_SUFFIXES = (".java",)
DEFAULT_MAX_COMMIT_SIZE = 100


class CommitLogError(Exception):
    """Base class for commit-store failures."""


class IngestError(CommitLogError):
    """Malformed record in the input stream; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DuplicateShaError(IngestError):
    """Two records share the same commit identifier."""


class UnknownReleaseError(CommitLogError):
    """A release tag that is not present in the store (or manifest)."""


class ExtractionError(CommitLogError):
    """Repository extraction failed (missing tag, git failure)."""


@dataclass(frozen=True)
class FileDelta:
    """Line churn of one file in one commit."""

    path: str
    added: int
    deleted: int

    @property
    def changed(self) -> int:
        return self.added + self.deleted


@dataclass(frozen=True)
class CommitRecord:
    """One commit: identity, normalized author, timestamp, release tag, deltas."""

    sha: str
    author: str
    timestamp: int
    release: str
    files: tuple[FileDelta, ...]


@dataclass(frozen=True)
class ReleaseWindow:
    """The commits assigned to one release, in input order."""

    release: str
    ordinal: int
    commit_shas: tuple[str, ...]


@dataclass(frozen=True)
class IngestConfig:
    source_suffixes: tuple[str, ...] = DEFAULT_SOURCE_SUFFIXES
    max_commit_size: int = DEFAULT_MAX_COMMIT_SIZE
    release_ordinals: Mapping[str, int] | None = None


class CommitStore:
    """Immutable, filtered view of a commit log, windowed by release.

    Commit size counts only files passing the source filter; every stored
    commit has size in [1, max_commit_size]. Instances are safe to share
    across threads once built.
    """

    def __init__(
        self,
        commits: dict[str, CommitRecord],
        windows: Sequence[ReleaseWindow],
        source_suffixes: tuple[str, ...],
        max_commit_size: int,
    ):
        self.commits = commits
        self.windows = list(windows)
        self.source_suffixes = source_suffixes
        self.max_commit_size = max_commit_size
        self._window_by_release = {w.release: w for w in self.windows}
        # Per-commit source deltas, indexed by path for O(1) delta lookups.
        self._source: dict[str, tuple[FileDelta, ...]] = {}
        self._source_index: dict[str, dict[str, FileDelta]] = {}
        for sha, commit in commits.items():
            src = tuple(
                d for d in commit.files if path_is_source(d.path, source_suffixes)
            )
            self._source[sha] = src
            self._source_index[sha] = {d.path: d for d in src}

    def __len__(self) -> int:
        return len(self.commits)

    @property
    def releases(self) -> list[str]:
        return [w.release for w in self.windows]

    def window(self, release: str) -> ReleaseWindow:
        try:
            return self._window_by_release[release]
        except KeyError:
            raise UnknownReleaseError(f"unknown release: {release!r}") from None

    def window_commits(self, release: str) -> list[CommitRecord]:
        return [self.commits[sha] for sha in self.window(release).commit_shas]

    def cumulative_commits(self, release: str) -> list[CommitRecord]:
        """All commits of windows with ordinal <= the target window's ordinal."""
        target = self.window(release).ordinal
        out: list[CommitRecord] = []
        for w in self.windows:
            if w.ordinal <= target:
                out.extend(self.commits[sha] for sha in w.commit_shas)
        return out

    def source_deltas(self, commit: CommitRecord) -> tuple[FileDelta, ...]:
        return self._source[commit.sha]

    def commit_size(self, commit: CommitRecord) -> int:
        return len(self._source[commit.sha])

    def delta(self, commit: CommitRecord, path: str) -> FileDelta | None:
        return self._source_index[commit.sha].get(path)

    def touched_files(self, release: str) -> list[str]:
        """Source files changed in the release window, sorted."""
        seen: set[str] = set()
        for commit in self.window_commits(release):
            seen.update(d.path for d in self.source_deltas(commit))
        return sorted(seen)


@dataclass
class FileChangeHistory:
    """Per-file, per-release view of commits, pre-bucketed by commit size.

    ``commits`` covers the target window only; ``cumulative`` spans every
    window up to and including it (for lifetime metrics).
    """

    store: CommitStore
    release: str
    path: str
    commits: list[CommitRecord] = field(default_factory=list)
    buckets: dict[int, list[CommitRecord]] = field(default_factory=dict)
    cumulative: list[CommitRecord] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.commits)

    def delta(self, commit: CommitRecord) -> FileDelta:
        d = self.store.delta(commit, self.path)
        if d is None:
            raise KeyError(f"{self.path} not changed by {commit.sha}")
        return d


def path_is_source(path: str, suffixes: tuple[str, ...]) -> bool:
    return path.endswith(suffixes) if suffixes else True


def _normalize_author(author: str) -> str:
    return author.strip().lower()


def _normalize_path(path: str) -> str:
    return path.replace("\\", "/")


def _parse_record(line_number: int, raw: str) -> CommitRecord:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise IngestError(line_number, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise IngestError(line_number, "record is not an object")

    for key in ("sha", "author", "timestamp", "release", "files"):
        if key not in obj:
            raise IngestError(line_number, f"missing field {key!r}")
    sha = obj["sha"]
    if not isinstance(sha, str) or not sha:
        raise IngestError(line_number, "sha must be a non-empty string")
    if not isinstance(obj["author"], str):
        raise IngestError(line_number, "author must be a string")
    if not isinstance(obj["timestamp"], int) or isinstance(obj["timestamp"], bool):
        raise IngestError(line_number, "timestamp must be an integer")
    if not isinstance(obj["release"], str) or not obj["release"]:
        raise IngestError(line_number, "release must be a non-empty string")
    if not isinstance(obj["files"], list) or not obj["files"]:
        raise IngestError(line_number, "files must be a non-empty list")

    deltas = []
    seen_paths: set[str] = set()
    for entry in obj["files"]:
        if not isinstance(entry, dict):
            raise IngestError(line_number, "file entry is not an object")
        try:
            path = entry["path"]
            added = entry["added"]
            deleted = entry["deleted"]
        except KeyError as exc:
            raise IngestError(line_number, f"file entry missing {exc.args[0]!r}") from None
        if not isinstance(path, str) or not path:
            raise IngestError(line_number, "file path must be a non-empty string")
        for count, name in ((added, "added"), (deleted, "deleted")):
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise IngestError(line_number, f"{name} must be a non-negative integer")
        path = _normalize_path(path)
        if path in seen_paths:
            raise IngestError(line_number, f"duplicate path in commit: {path}")
        seen_paths.add(path)
        deltas.append(FileDelta(path=path, added=added, deleted=deleted))

    return CommitRecord(
        sha=sha,
        author=_normalize_author(obj["author"]),
        timestamp=obj["timestamp"],
        release=obj["release"],
        files=tuple(deltas),
    )


def ingest_commit_log(
    stream: Iterable[str], config: IngestConfig | None = None
) -> CommitStore:
    """Build a CommitStore from line-delimited JSON records.

    Keeps exactly the commits whose source-file count falls in
    [1, max_commit_size]; zero-source commits are dropped, oversized ones
    excluded. Window order follows the release manifest when supplied,
    otherwise first appearance in the stream; records keep input order
    within each window.
    """
    config = config or IngestConfig()
    commits: dict[str, CommitRecord] = {}
    assigned: dict[str, list[str]] = defaultdict(list)
    release_order: list[str] = []
    dropped = 0

    for line_number, raw in enumerate(stream, 1):
        if not raw.strip():
            continue
        record = _parse_record(line_number, raw)
        if record.sha in commits:
            raise DuplicateShaError(line_number, f"duplicate sha: {record.sha}")
        if (
            config.release_ordinals is not None
            and record.release not in config.release_ordinals
        ):
            raise UnknownReleaseError(
                f"line {line_number}: release {record.release!r} not in manifest"
            )
        size = sum(
            1 for d in record.files if path_is_source(d.path, config.source_suffixes)
        )
        if size < 1 or size > config.max_commit_size:
            dropped += 1
            continue
        commits[record.sha] = record
        if record.release not in assigned:
            release_order.append(record.release)
        assigned[record.release].append(record.sha)

    if config.release_ordinals is not None:
        ordered = sorted(config.release_ordinals.items(), key=lambda kv: kv[1])
        windows = [
            ReleaseWindow(release=r, ordinal=o, commit_shas=tuple(assigned.get(r, ())))
            for r, o in ordered
        ]
    else:
        windows = [
            ReleaseWindow(release=r, ordinal=i, commit_shas=tuple(assigned[r]))
            for i, r in enumerate(release_order)
        ]

    if dropped:
        logger.info("ingest: dropped %d commits outside the size filter", dropped)
    return CommitStore(
        commits=commits,
        windows=windows,
        source_suffixes=tuple(config.source_suffixes),
        max_commit_size=config.max_commit_size,
    )


def dump_commit_log(store: CommitStore) -> Iterator[str]:
    """Re-serialize a store as JSONL, window by window, in stored order.

    Ingesting the emitted lines with the same config reproduces the store.
    """
    for window in store.windows:
        for sha in window.commit_shas:
            c = store.commits[sha]
            yield json.dumps(
                {
                    "sha": c.sha,
                    "author": c.author,
                    "timestamp": c.timestamp,
                    "release": c.release,
                    "files": [
                        {"path": d.path, "added": d.added, "deleted": d.deleted}
                        for d in c.files
                    ],
                },
                separators=(",", ":"),
            )


def load_release_manifest(path: str | Path) -> dict[str, int]:
    """Read a release manifest CSV with header ``release_id,ordinal``."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"release_id", "ordinal"} <= set(
            reader.fieldnames
        ):
            raise CommitLogError(
                f"release manifest {path}: header must contain release_id,ordinal"
            )
        out: dict[str, int] = {}
        for row in reader:
            release = row["release_id"].strip()
            if release in out:
                raise CommitLogError(f"release manifest {path}: duplicate {release!r}")
            out[release] = int(row["ordinal"])
    return out


def history_of(store: CommitStore, release: str, path: str) -> FileChangeHistory:
    """Commits of the release window touching ``path``, bucketed by commit size.

    Raises UnknownReleaseError for releases absent from the store. A path
    untouched in the window yields an empty history.
    """
    window_commits = store.window_commits(release)  # validates the release
    history = FileChangeHistory(store=store, release=release, path=path)
    for commit in window_commits:
        if store.delta(commit, path) is not None:
            history.commits.append(commit)
            history.buckets.setdefault(store.commit_size(commit), []).append(commit)
    for commit in store.cumulative_commits(release):
        if store.delta(commit, path) is not None:
            history.cumulative.append(commit)
    return history


# --- repository extraction -------------------------------------------------

_RECORD_SEP = "\x01"
_FIELD_SEP = "\x02"


def _run_git(repo_path: str | Path, *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo_path), *args],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ExtractionError(
            f"git {args[0]} failed: {proc.stderr.strip() or proc.returncode}"
        )
    return proc.stdout


def _verify_tag(repo_path: str | Path, tag: str) -> None:
    proc = subprocess.run(
        ["git", "-C", str(repo_path), "rev-parse", "--verify", "--quiet", f"{tag}^{{commit}}"],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ExtractionError(f"missing tag: {tag}")


def extract_from_repository(
    repo_path: str | Path, tag_pairs: Sequence[tuple[str, str, str]]
) -> Iterator[str]:
    """Emit JSONL commit records for each (prev_tag, tag, release_id) range.

    A range covers the commits reachable from ``tag`` and not from
    ``prev_tag``, parents first (topological order). Deltas come from git's
    numstat output; binary files are recorded as added=0, deleted=0 with a
    warning. Developer identity is the lower-cased author e-mail, falling
    back to the lower-cased author name.
    """
    for prev_tag, tag, release_id in tag_pairs:
        _verify_tag(repo_path, prev_tag)
        _verify_tag(repo_path, tag)
        # %x01/%x02 are expanded by git itself; NUL cannot appear in argv
        out = _run_git(
            repo_path,
            "log",
            "--topo-order",
            "--reverse",
            "--no-renames",
            "--numstat",
            "--format=%x01%H%x02%ae%x02%an%x02%ct",
            f"{prev_tag}..{tag}",
        )
        for block in out.split(_RECORD_SEP):
            if not block.strip():
                continue
            lines = block.splitlines()
            sha, email, name, timestamp = lines[0].split(_FIELD_SEP)
            author = email.strip().lower() or name.strip().lower()
            deltas = []
            for line in lines[1:]:
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) < 3:
                    continue
                added_s, deleted_s, path = parts[0], parts[1], "\t".join(parts[2:])
                if added_s == "-" or deleted_s == "-":
                    logger.warning(
                        "binary delta in %s: %s recorded as added=0, deleted=0",
                        sha,
                        path,
                    )
                    added, deleted = 0, 0
                else:
                    added, deleted = int(added_s), int(deleted_s)
                deltas.append({"path": _normalize_path(path), "added": added, "deleted": deleted})
            if not deltas:
                continue  # empty commits and merges carry no numstat
            yield json.dumps(
                {
                    "sha": sha,
                    "author": author,
                    "timestamp": int(timestamp),
                    "release": release_id,
                    "files": deltas,
                },
                separators=(",", ":"),
            )
