"""Hyper co-change graph, its line graph, and vector centralities.

Commits become hyperedges over the files they changed together. Classical
centralities are computed on the line graph (hyperedges as nodes, adjacent
when they overlap), rescaled to unit sum, and then redistributed to files:
slot l of a file's vector centrality collects 1/l of the score of every
size-l hyperedge containing it. The rescaling makes the slot mass over all
files sum to exactly 1, so the four measures' 400 features share one scale.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import networkx as nx
import numpy as np
import scipy.sparse

from .commitlog import CommitStore

N_SLOTS = 100
MAX_CARDINALITY = 100
MEASURES = (
    ("degree", "DEG"),
    ("betweenness", "BETW"),
    ("closeness", "CLOS"),
    ("eigenvector", "EIG"),
)
VC_COLUMNS = [
    f"VC_{abbr}_{l:03d}" for _, abbr in MEASURES for l in range(1, N_SLOTS + 1)
]

EIGEN_TOLERANCE = 1e-10
EIGEN_MAX_ITERATIONS = 10_000


class HypergraphError(Exception):
    """Base class for hypergraph/centrality failures."""


class ConvergenceError(HypergraphError):
    """Power iteration failed to converge; carries the iteration count."""

    def __init__(self, iterations: int):
        super().__init__(f"eigenvector centrality did not converge in {iterations} iterations")
        self.iterations = iterations


class ScoreMismatchError(HypergraphError):
    """Edge scores do not cover exactly the hypergraph's edge ids."""


@dataclass(frozen=True)
class Hyperedge:
    edge_id: str
    members: frozenset[str]

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class Hypergraph:
    """Files as nodes; one hyperedge per qualifying commit (multiset)."""

    nodes: set[str]
    hyperedges: list[Hyperedge]

    @property
    def h_max(self) -> int:
        return max((len(e) for e in self.hyperedges), default=0)

    def __len__(self) -> int:
        return len(self.hyperedges)


def make_hypergraph(edges: Iterable[tuple[str, Iterable[str]]]) -> Hypergraph:
    """Build a hypergraph from (edge_id, members) pairs, validating shape."""
    hyperedges: list[Hyperedge] = []
    nodes: set[str] = set()
    seen: set[str] = set()
    for edge_id, members in edges:
        member_set = frozenset(members)
        if edge_id in seen:
            raise HypergraphError(f"duplicate hyperedge id: {edge_id}")
        if not 2 <= len(member_set) <= MAX_CARDINALITY:
            raise HypergraphError(
                f"hyperedge {edge_id} has cardinality {len(member_set)}, "
                f"expected 2..{MAX_CARDINALITY}"
            )
        seen.add(edge_id)
        hyperedges.append(Hyperedge(edge_id, member_set))
        nodes.update(member_set)
    return Hypergraph(nodes=nodes, hyperedges=hyperedges)


def build_hypergraph(store: CommitStore, release: str) -> Hypergraph:
    """One hyperedge per window commit of size >= 2; singletons excluded."""
    edges = []
    for commit in store.window_commits(release):
        paths = [d.path for d in store.source_deltas(commit)]
        if len(paths) >= 2:
            edges.append((commit.sha, paths))
    return make_hypergraph(edges)


@dataclass
class LineGraph:
    """Hyperedges as nodes, adjacent iff they share at least one file."""

    nodes: list[str]
    adjacency: dict[str, set[str]]

    def edge_pairs(self) -> set[frozenset[str]]:
        return {
            frozenset((a, b)) for a, neigh in self.adjacency.items() for b in neigh
        }

    def __len__(self) -> int:
        return len(self.nodes)


def line_graph(hg: Hypergraph) -> LineGraph:
    membership: dict[str, list[str]] = defaultdict(list)
    for edge in hg.hyperedges:
        for node in edge.members:
            membership[node].append(edge.edge_id)
    adjacency: dict[str, set[str]] = {e.edge_id: set() for e in hg.hyperedges}
    for edge_ids in membership.values():
        for i, a in enumerate(edge_ids):
            for b in edge_ids[i + 1 :]:
                adjacency[a].add(b)
                adjacency[b].add(a)
    return LineGraph(nodes=[e.edge_id for e in hg.hyperedges], adjacency=adjacency)


def _as_nx(lg: LineGraph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(lg.nodes)
    g.add_edges_from(tuple(pair) for pair in lg.edge_pairs())
    return g


def _eigenvector_raw(lg: LineGraph) -> dict[str, float]:
    # power iteration on A + I: the shift kills period-2 oscillation on
    # bipartite components without moving the dominant eigenvector
    m = len(lg.nodes)
    index = {e: i for i, e in enumerate(lg.nodes)}
    rows: list[int] = []
    cols: list[int] = []
    for e, neigh in lg.adjacency.items():
        for n in neigh:
            rows.append(index[e])
            cols.append(index[n])
    matrix = scipy.sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(m, m)
    )
    x = np.full(m, 1.0 / m)
    for _ in range(EIGEN_MAX_ITERATIONS):
        y = x + matrix @ x
        y /= y.sum()
        if float(np.abs(y - x).sum()) < EIGEN_TOLERANCE:
            return {e: float(y[index[e]]) for e in lg.nodes}
        x = y
    raise ConvergenceError(EIGEN_MAX_ITERATIONS)


def hyperedge_centrality(lg: LineGraph, measure: str) -> dict[str, float]:
    """Classical centrality on the line graph, rescaled to unit sum.

    degree = raw degree; betweenness = pair-normalized shortest-path
    betweenness; closeness = harmonic closeness (finite on disconnected
    graphs); eigenvector = power iteration, tolerance 1e-10, capped at
    10,000 iterations. A measure that is 0 everywhere (isolated nodes,
    single-edge graphs) falls back to uniform scores so the total stays 1.
    """
    if not lg.nodes:
        raise HypergraphError("centrality of an empty line graph")
    if measure == "degree":
        raw = {e: float(len(lg.adjacency[e])) for e in lg.nodes}
    elif measure == "betweenness":
        raw = nx.betweenness_centrality(_as_nx(lg), normalized=True)
    elif measure == "closeness":
        raw = nx.harmonic_centrality(_as_nx(lg))
    elif measure == "eigenvector":
        raw = _eigenvector_raw(lg)
    else:
        raise ValueError(f"unknown centrality measure: {measure}")
    total = math.fsum(raw.values())
    if total <= 0:
        return {e: 1.0 / len(lg.nodes) for e in lg.nodes}
    return {e: raw[e] / total for e in lg.nodes}


@dataclass(frozen=True, eq=False)
class VectorCentrality:
    """Per-file 100-slot profiles for one measure; slot 1 is structurally 0."""

    measure: str
    slots: dict[str, np.ndarray]

    def slot(self, node: str, l: int) -> float:
        return float(self.slots[node][l - 1])

    def total_mass(self) -> float:
        return float(sum(arr.sum() for arr in self.slots.values()))


def vector_centrality(
    hg: Hypergraph, scores: dict[str, float], measure: str = "degree"
) -> VectorCentrality:
    """Distribute hyperedge scores to member files by hyperedge size.

    Slot l of file j = (1/l) * sum of scores of the size-l hyperedges
    containing j. With unit-sum scores the slot mass over all files is 1;
    scaling all scores by c scales every slot by c.
    """
    ids = {e.edge_id for e in hg.hyperedges}
    if set(scores) != ids:
        unknown = sorted(set(scores) - ids)[:3]
        missing = sorted(ids - set(scores))[:3]
        raise ScoreMismatchError(
            f"scores do not match hyperedge ids (unknown={unknown}, missing={missing})"
        )
    slots = {node: np.zeros(N_SLOTS) for node in hg.nodes}
    for edge in hg.hyperedges:
        l = len(edge)
        share = scores[edge.edge_id] / l
        for node in edge.members:
            slots[node][l - 1] += share
    return VectorCentrality(measure=measure, slots=slots)


def centrality_features(store: CommitStore, release: str) -> dict[str, np.ndarray]:
    """Concatenated 400-column centrality block for every touched file.

    Files outside the hypergraph (changed only by singleton commits) get
    all zeros.
    """
    files = store.touched_files(release)
    out = {path: np.zeros(len(MEASURES) * N_SLOTS) for path in files}
    hg = build_hypergraph(store, release)
    if not hg.hyperedges:
        return out
    lg = line_graph(hg)
    for k, (measure, _) in enumerate(MEASURES):
        scores = hyperedge_centrality(lg, measure)
        vc = vector_centrality(hg, scores, measure)
        for node, arr in vc.slots.items():
            out[node][k * N_SLOTS : (k + 1) * N_SLOTS] = arr
    return out


def export_hypergraph(hg: Hypergraph, destination: str | Path) -> None:
    """JSONL export: one {edge_id, members} object per hyperedge."""
    with open(destination, "w") as fh:
        for edge in hg.hyperedges:
            fh.write(
                json.dumps(
                    {"edge_id": edge.edge_id, "members": sorted(edge.members)},
                    separators=(",", ":"),
                )
                + "\n"
            )
