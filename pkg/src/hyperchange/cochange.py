"""Weighted pairwise co-change graph over one release window."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

from .commitlog import CommitStore


@dataclass
class PairwiseGraph:
    """Files as nodes; edge weight = number of commits co-changing the pair."""

    nodes: set[str] = field(default_factory=set)
    edges: dict[frozenset[str], int] = field(default_factory=dict)

    def weight(self, a: str, b: str) -> int:
        return self.edges.get(frozenset((a, b)), 0)

    def neighbors(self, node: str) -> dict[str, int]:
        """Adjacent files with their co-change counts."""
        out: dict[str, int] = {}
        for pair, w in self.edges.items():
            if node in pair:
                (other,) = pair - {node}
                out[other] = w
        return out

    def degree(self, node: str) -> int:
        return sum(1 for pair in self.edges if node in pair)


def build_pairwise(store: CommitStore, release: str) -> PairwiseGraph:
    """Accumulate unordered file pairs over window commits of size >= 2.

    Singleton commits touch no pair and contribute nothing; their files
    still appear as (isolated) nodes.
    """
    graph = PairwiseGraph()
    weights: dict[frozenset[str], int] = defaultdict(int)
    for commit in store.window_commits(release):
        paths = sorted(d.path for d in store.source_deltas(commit))
        graph.nodes.update(paths)
        for a, b in combinations(paths, 2):
            weights[frozenset((a, b))] += 1
    graph.edges = dict(weights)
    return graph


def degree_sequence(graph: PairwiseGraph) -> list[int]:
    """Unweighted degree multiset, ascending."""
    degrees: dict[str, int] = {n: 0 for n in graph.nodes}
    for pair in graph.edges:
        for node in pair:
            degrees[node] += 1
    return sorted(degrees.values())


def export_edge_list(graph: PairwiseGraph, destination: str | Path) -> None:
    """CSV (file_a, file_b, weight); file_a < file_b, rows lexicographic."""
    rows = sorted((min(p), max(p), w) for p, w in graph.edges.items())
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file_a", "file_b", "weight"])
        writer.writerows(rows)
