from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SET1, SET2, make_lines, record, store_from
from hyperchange.commitlog import (
    DuplicateShaError,
    ExtractionError,
    IngestConfig,
    IngestError,
    UnknownReleaseError,
    dump_commit_log,
    extract_from_repository,
    history_of,
    ingest_commit_log,
    load_release_manifest,
)


def test_worked_example_store_shapes(set1_store, set2_store):
    assert len(set1_store) == 4
    assert set1_store.releases == ["r1"]
    assert set1_store.window("r1").commit_shas == ("C1", "C2", "C3", "C4")
    assert len(set2_store) == 8
    assert all(set2_store.commit_size(c) == 2 for c in set2_store.commits.values())


def test_empty_stream():
    store = store_from([])
    assert len(store) == 0
    assert store.windows == []


def test_commit_over_size_limit_excluded():
    big = record("big", "a", 1, "r1", [(f"f{i}.java", 1, 0) for i in range(101)])
    exactly = record("ok", "a", 2, "r1", [(f"f{i}.java", 1, 0) for i in range(100)])
    store = store_from([big, exactly])
    assert set(store.commits) == {"ok"}


def test_zero_source_commit_dropped():
    lines = [
        record("doc", "a", 1, "r1", [("README.md", 5, 0)]),
        record("src", "a", 2, "r1", [("x.java", 1, 1)]),
    ]
    store = store_from(lines)
    assert set(store.commits) == {"src"}


def test_commit_size_counts_only_source_files():
    mixed = record(
        "m", "a", 1, "r1", [("x.java", 1, 0), ("docs/guide.md", 9, 9), ("y.java", 2, 1)]
    )
    store = store_from([mixed])
    commit = store.commits["m"]
    assert store.commit_size(commit) == 2
    assert {d.path for d in store.source_deltas(commit)} == {"x.java", "y.java"}


def test_malformed_json_carries_line_number():
    lines = [record("a", "a", 1, "r1", [("x.java", 1, 0)]), "{not json"]
    with pytest.raises(IngestError) as exc_info:
        store_from(lines)
    assert exc_info.value.line_number == 2
    assert "line 2" in str(exc_info.value)


@pytest.mark.parametrize(
    "bad",
    [
        '{"author": "a", "timestamp": 1, "release": "r", "files": [{"path": "x.java", "added": 1, "deleted": 0}]}',
        json.dumps({"sha": "s", "author": "a", "timestamp": 1, "release": "r", "files": []}),
        record("s", "a", 1, "r", [("x.java", -1, 0)]),
        record("s", "a", 1, "r", [("x.java", 1, -2)]),
        record("s", "a", 1, "r", [("x.java", 1, 0), ("x.java", 2, 0)]),
        '{"sha": "s", "author": "a", "timestamp": "soon", "release": "r", "files": [{"path": "x.java", "added": 1, "deleted": 0}]}',
    ],
)
def test_invalid_records_rejected(bad):
    with pytest.raises(IngestError):
        store_from([bad])


def test_duplicate_sha_rejected():
    lines = [
        record("dup", "a", 1, "r1", [("x.java", 1, 0)]),
        record("dup", "b", 2, "r1", [("y.java", 1, 0)]),
    ]
    with pytest.raises(DuplicateShaError):
        store_from(lines)


def test_unknown_release_with_manifest():
    lines = [record("s", "a", 1, "r9", [("x.java", 1, 0)])]
    with pytest.raises(UnknownReleaseError):
        ingest_commit_log(lines, IngestConfig(release_ordinals={"r1": 0}))


def test_manifest_fixes_window_order_and_empty_windows():
    lines = [
        record("s2", "a", 5, "r2", [("x.java", 1, 0)]),
        record("s1", "a", 1, "r1", [("y.java", 1, 0)]),
    ]
    store = ingest_commit_log(
        lines, IngestConfig(release_ordinals={"r1": 0, "r2": 1, "r3": 2})
    )
    assert store.releases == ["r1", "r2", "r3"]
    assert store.window("r3").commit_shas == ()


def test_windows_follow_first_appearance_without_manifest():
    lines = [
        record("s1", "a", 9, "rB", [("x.java", 1, 0)]),
        record("s2", "a", 1, "rA", [("y.java", 1, 0)]),
        record("s3", "a", 2, "rB", [("z.java", 1, 0)]),
    ]
    store = store_from(lines)
    assert store.releases == ["rB", "rA"]
    assert store.window("rB").commit_shas == ("s1", "s3")


def test_author_lowercased_and_backslashes_normalized():
    store = store_from([record("s", "Alice@EXAMPLE.com", 1, "r1", [("a\\b\\x.java", 1, 0)])])
    commit = store.commits["s"]
    assert commit.author == "alice@example.com"
    assert commit.files[0].path == "a/b/x.java"


def test_history_buckets_set1_f2(set1_store):
    history = history_of(set1_store, "r1", "F2.java")
    by_size = {size: [c.sha for c in commits] for size, commits in history.buckets.items()}
    assert by_size == {4: ["C1"], 3: ["C2", "C4"]}


def test_history_buckets_set2_f4(set2_store):
    history = history_of(set2_store, "r1", "F4.java")
    by_size = {size: [c.sha for c in commits] for size, commits in history.buckets.items()}
    assert by_size == {2: ["C2", "C3", "C5", "C7"]}


def test_history_untouched_path_is_empty(set1_store):
    history = history_of(set1_store, "r1", "F9.java")
    assert not history
    assert history.buckets == {}


def test_history_unknown_release(set1_store):
    with pytest.raises(UnknownReleaseError):
        history_of(set1_store, "r99", "F1.java")


def test_touched_files_sorted(set1_store):
    assert set1_store.touched_files("r1") == [
        "F1.java",
        "F2.java",
        "F3.java",
        "F4.java",
        "F5.java",
    ]


def multiwindow_lines():
    return [
        record("w1a", "alice", 1, "r1", [("x.java", 10, 0), ("y.java", 3, 1)]),
        record("w1b", "bob", 2, "r1", [("x.java", 2, 2)]),
        record("w2a", "carol", 3, "r2", [("x.java", 1, 1)]),
        record("w2b", "alice", 4, "r2", [("y.java", 5, 5)]),
    ]


def test_cumulative_history_monotone():
    store = store_from(multiwindow_lines())
    early = {c.author for c in history_of(store, "r1", "x.java").cumulative}
    late = {c.author for c in history_of(store, "r2", "x.java").cumulative}
    assert early <= late
    assert late == {"alice", "bob", "carol"}


def test_cumulative_respects_manifest_order():
    store = ingest_commit_log(
        multiwindow_lines(), IngestConfig(release_ordinals={"r2": 0, "r1": 1})
    )
    # with r2 first, its cumulative view must not see r1 commits
    early = [c.sha for c in history_of(store, "r2", "x.java").cumulative]
    assert early == ["w2a"]


commit_strategy = st.lists(
    st.tuples(
        st.sampled_from(["alice", "bob", "carol", "dan"]),
        st.sampled_from(["r1", "r2"]),
        st.lists(
            st.sampled_from([f"p{i}.java" for i in range(8)]),
            min_size=1,
            max_size=6,
            unique=True,
        ),
        st.tuples(st.integers(0, 40), st.integers(0, 40)),
    ),
    min_size=1,
    max_size=25,
)


@settings(deadline=None, max_examples=60)
@given(commit_strategy)
def test_size_buckets_partition_the_window(commits):
    lines = [
        record(f"s{i}", author, i, release, [(p, a, d) for p in paths])
        for i, (author, release, paths, (a, d)) in enumerate(commits)
    ]
    store = store_from(lines)
    for release in store.releases:
        for path in store.touched_files(release):
            history = history_of(store, release, path)
            assert sum(len(b) for b in history.buckets.values()) == len(history.commits)


@settings(deadline=None, max_examples=40)
@given(commit_strategy)
def test_ingest_dump_round_trip(commits):
    lines = [
        record(f"s{i}", author, i, release, [(p, a, d) for p in paths])
        for i, (author, release, paths, (a, d)) in enumerate(commits)
    ]
    store = store_from(lines)
    again = store_from(list(dump_commit_log(store)))
    assert again.commits == store.commits
    assert again.windows == store.windows


def test_release_manifest_loader(tmp_path):
    manifest = tmp_path / "releases.csv"
    manifest.write_text("release_id,ordinal\nr1,0\nr2,1\n")
    assert load_release_manifest(manifest) == {"r1": 0, "r2": 1}


# --- extraction against a real repository ----------------------------------


def test_extract_single_commit_range(git_repo):
    records = list(extract_from_repository(git_repo, [("v0", "v1", "rel-1")]))
    assert len(records) == 1
    obj = json.loads(records[0])
    assert obj["release"] == "rel-1"
    assert obj["author"] == "alice@example.com"
    assert obj["files"] == [{"path": "a.java", "added": 3, "deleted": 1}]


def test_extract_matches_numstat_oracle(git_repo):
    import subprocess

    out = subprocess.run(
        ["git", "-C", str(git_repo), "diff", "--numstat", "v0..v1"],
        check=True,
        capture_output=True,
        text=True,
    ).stdout.split()
    obj = json.loads(next(iter(extract_from_repository(git_repo, [("v0", "v1", "r")]))))
    assert [str(obj["files"][0]["added"]), str(obj["files"][0]["deleted"])] == out[:2]


def test_extract_empty_range(git_repo):
    assert list(extract_from_repository(git_repo, [("v1", "v1", "r")])) == []


def test_extract_missing_tag_named(git_repo):
    with pytest.raises(ExtractionError, match="v999"):
        list(extract_from_repository(git_repo, [("v1", "v999", "r")]))


def test_extract_binary_recorded_as_zero(git_repo, caplog):
    import logging

    with caplog.at_level(logging.WARNING, logger="hyperchange.commitlog"):
        records = [json.loads(r) for r in extract_from_repository(git_repo, [("v1", "v2", "r")])]
    binary = [f for r in records for f in r["files"] if f["path"] == "blob.bin"]
    assert binary == [{"path": "blob.bin", "added": 0, "deleted": 0}]
    assert any("blob.bin" in m for m in caplog.messages)


def test_extract_then_ingest_drops_non_source(git_repo):
    records = list(extract_from_repository(git_repo, [("v1", "v2", "r")]))
    # readme-only and binary-only commits survive extraction ...
    paths = {f["path"] for r in map(json.loads, records) for f in r["files"]}
    assert "README.md" in paths and "blob.bin" in paths
    # ... but carry no source files, so ingest drops them
    store = store_from(records)
    assert len(store) == 1
    (commit,) = store.commits.values()
    assert {d.path for d in store.source_deltas(commit)} == {"b.java", "c.java"}
    assert commit.author == "bob@example.com"
