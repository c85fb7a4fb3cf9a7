"""Shared fixtures: tiny feature tables and the synthetic smoke dataset.

The smoke dataset is produced by the mining toolkit's CLI so the harness
is exercised against real exported matrices, not hand-rolled lookalikes.
"""

from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest


def write_feature_csv(dest: Path, paths, labels, matrix) -> Path:
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label"] + [f"c{j:03d}" for j in range(matrix.shape[1])])
        for path, label, row in zip(paths, labels, matrix):
            writer.writerow([path, int(label)] + ["%.12g" % v for v in row])
    return dest


@pytest.fixture(scope="session")
def toy_tables(tmp_path_factory):
    """Three small aligned matrices: informative, weaker, and pure noise."""
    root = tmp_path_factory.mktemp("toy_tables")
    rng = np.random.default_rng(20240817)
    n = 90
    paths = [f"src/f{i:03d}.java" for i in range(n)]
    labels = (rng.random(n) < 0.4).astype(int)
    strong = labels[:, None] * 1.8 + rng.normal(size=(n, 6))
    weak = labels[:, None] * 0.8 + rng.normal(size=(n, 6))
    noise = rng.normal(size=(n, 6))
    return {
        "paths": paths,
        "labels": labels,
        "strong": write_feature_csv(root / "strong.csv", paths, labels, strong),
        "weak": write_feature_csv(root / "weak.csv", paths, labels, weak),
        "noise": write_feature_csv(root / "noise.csv", paths, labels, noise),
    }


# --- synthetic project for the end-to-end smoke -------------------------

N_PER_CLASS = 150
SMALL_SIZE = 3
LARGE_SIZE = 25
ROUNDS = 6
AUTHORS = ("alice", "bob", "carol")


def _smoke_commits():
    """Commits for 300 files: half change in small commits, half in large ones.

    Every file participates in exactly one commit per round, with rotating
    companions, the same author cycle, and identical per-file churn — so
    scalar aggregates barely separate the classes while the commit-size
    strata separate them completely.
    """
    commits = []
    timestamp = 1_700_000_000

    def emit(prefix, round_no, index, members):
        nonlocal timestamp
        timestamp += 60
        commits.append(
            {
                "sha": f"{prefix}{round_no}x{index:03d}",
                "author": AUTHORS[(round_no + index) % len(AUTHORS)],
                "timestamp": timestamp,
                "release": "r1",
                "files": [
                    {"path": member, "added": 10, "deleted": 2} for member in members
                ],
            }
        )

    for round_no in range(ROUNDS):
        for j in range(N_PER_CLASS // SMALL_SIZE):
            members = [
                f"small/s{(SMALL_SIZE * j + offset + round_no) % N_PER_CLASS:03d}.java"
                for offset in range(SMALL_SIZE)
            ]
            emit("s", round_no, j, members)
        for j in range(N_PER_CLASS // LARGE_SIZE):
            members = [
                f"large/l{(LARGE_SIZE * j + 7 * round_no + offset) % N_PER_CLASS:03d}.java"
                for offset in range(LARGE_SIZE)
            ]
            emit("l", round_no, j, members)
    return commits


@pytest.fixture(scope="session")
def smoke_matrices(tmp_path_factory):
    """PR+SP / PR+VP / PR+VP+VC CSVs for the 300-file synthetic project."""
    root = tmp_path_factory.mktemp("smoke")
    log_path = root / "commits.jsonl"
    with open(log_path, "w") as fh:
        for record in _smoke_commits():
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    rng = np.random.default_rng(99)
    corpus_path = root / "corpus.csv"
    with open(corpus_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["File"] + [f"PM{i:02d}" for i in range(1, 55)] + ["RealBug"])
        for cls, prefix, label in (("small", "s", 0), ("large", "l", 1)):
            for i in range(N_PER_CLASS):
                noise = rng.normal(size=54)
                writer.writerow(
                    [f"{cls}/{prefix}{i:03d}.java"]
                    + ["%.12g" % v for v in noise]
                    + [label]
                )

    matrices = {}
    for feature_set, flag in (("PR+SP", "pr+sp"), ("PR+VP", "pr+vp"), ("PR+VP+VC", "pr+vp+vc")):
        out = root / f"{flag.replace('+', '_')}.csv"
        subprocess.run(
            [
                sys.executable, "-m", "hyperchange.cli", "features",
                "--commit-log", str(log_path),
                "--corpus", str(corpus_path),
                "--release", "r1",
                "--feature-set", flag,
                "--out", str(out),
            ],
            check=True,
            capture_output=True,
            text=True,
        )
        matrices[feature_set] = out
    return matrices
