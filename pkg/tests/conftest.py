from __future__ import annotations

import json
import subprocess

import pytest

from hyperchange.commitlog import IngestConfig, ingest_commit_log

# Worked example: change set 1 (mixed commit sizes) and change set 2
# (eight pair commits) over files F1..F5. Same pairwise degree sequence,
# different hyperedge sizes.
SET1 = {
    "C1": ["F1", "F2", "F3", "F4"],
    "C2": ["F2", "F4", "F5"],
    "C3": ["F4", "F5"],
    "C4": ["F1", "F2", "F3"],
}
SET2 = {
    "C1": ["F1", "F2"],
    "C2": ["F4", "F5"],
    "C3": ["F3", "F4"],
    "C4": ["F3", "F5"],
    "C5": ["F1", "F4"],
    "C6": ["F1", "F5"],
    "C7": ["F2", "F4"],
    "C8": ["F2", "F5"],
}


def make_lines(commits, release="r1", author_cycle=("alice", "bob", "carol")):
    """JSONL lines for {sha: [bare file names]} with 1/0 line deltas."""
    lines = []
    for i, (sha, files) in enumerate(commits.items()):
        lines.append(
            json.dumps(
                {
                    "sha": sha,
                    "author": author_cycle[i % len(author_cycle)],
                    "timestamp": 1_700_000_000 + i,
                    "release": release,
                    "files": [
                        {"path": f"{name}.java", "added": 1, "deleted": 0}
                        for name in files
                    ],
                }
            )
        )
    return lines


def record(sha, author, timestamp, release, files):
    """One JSONL record; files = [(path, added, deleted), ...]."""
    return json.dumps(
        {
            "sha": sha,
            "author": author,
            "timestamp": timestamp,
            "release": release,
            "files": [{"path": p, "added": a, "deleted": d} for p, a, d in files],
        }
    )


def store_from(lines, **config_kwargs):
    return ingest_commit_log(lines, IngestConfig(**config_kwargs) if config_kwargs else None)


@pytest.fixture(scope="session")
def set1_store():
    return store_from(make_lines(SET1))


@pytest.fixture(scope="session")
def set2_store():
    return store_from(make_lines(SET2))


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    """Corpus CSV for F1..F5.java: File, 54 product columns, RealBug."""
    path = tmp_path_factory.mktemp("corpus") / "toy_corpus.csv"
    product_columns = [f"PM{i:02d}" for i in range(1, 55)]
    rows = []
    for i, name in enumerate(["F1", "F2", "F3", "F4", "F5"]):
        values = [round(0.1 * (i + 1) + 0.01 * j, 4) for j in range(54)]
        rows.append([f"{name}.java", *values, i % 2])
    with open(path, "w") as fh:
        fh.write(",".join(["File", *product_columns, "RealBug"]) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return path


def _git(repo, *args, env_extra=None):
    import os

    env = dict(os.environ)
    env.update(
        {
            "GIT_AUTHOR_NAME": "Alice Dev",
            "GIT_AUTHOR_EMAIL": "Alice@Example.com",
            "GIT_COMMITTER_NAME": "Alice Dev",
            "GIT_COMMITTER_EMAIL": "alice@example.com",
            "GIT_AUTHOR_DATE": "2024-01-01T00:00:00 +0000",
            "GIT_COMMITTER_DATE": "2024-01-01T00:00:00 +0000",
        }
    )
    if env_extra:
        env.update(env_extra)
    subprocess.run(
        ["git", "-C", str(repo), *args],
        check=True,
        env=env,
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def git_repo(tmp_path_factory):
    """Fixture repository: tags v0 (base), v1 (a.java edit), v2 (mixed)."""
    repo = tmp_path_factory.mktemp("repo")
    _git(repo, "init", "-q", "-b", "main")

    (repo / "a.java").write_text("one\ntwo\nthree\nfour\n")
    _git(repo, "add", "a.java")
    _git(repo, "commit", "-q", "-m", "base")
    _git(repo, "tag", "v0")

    (repo / "a.java").write_text("one\ntwo\nthree\nnew1\nnew2\nnew3\n")
    _git(repo, "add", "a.java")
    _git(repo, "commit", "-q", "-m", "rework tail of a")
    _git(repo, "tag", "v1")

    (repo / "README.md").write_text("docs only\n")
    _git(repo, "add", "README.md")
    _git(repo, "commit", "-q", "-m", "add readme")

    (repo / "blob.bin").write_bytes(bytes(range(256)) * 4)
    _git(repo, "add", "blob.bin")
    _git(repo, "commit", "-q", "-m", "add binary blob")

    (repo / "b.java").write_text("b1\nb2\n")
    (repo / "c.java").write_text("c1\nc2\n")
    _git(repo, "add", "b.java", "c.java")
    _git(
        repo,
        "commit",
        "-q",
        "-m",
        "introduce b and c",
        env_extra={
            "GIT_AUTHOR_NAME": "Bob Dev",
            "GIT_AUTHOR_EMAIL": "bob@example.com",
        },
    )
    _git(repo, "tag", "v2")
    return repo
