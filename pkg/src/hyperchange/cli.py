"""Command-line front end: extract, features, graph-export, self-test.

Exit codes: 0 success, 1 data error, 2 usage error. Errors print one
machine-parseable line (``error: <kind>: <reason>``) to stderr. The
HYPERCHANGE_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import commitlog, featureset
from .cochange import build_pairwise, degree_sequence, export_edge_list
from .commitlog import (
    CommitLogError,
    IngestConfig,
    ingest_commit_log,
    load_release_manifest,
)
from .hypercentrality import (
    HypergraphError,
    build_hypergraph,
    export_hypergraph,
    hyperedge_centrality,
    line_graph,
    vector_centrality,
)

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
DATA_ERROR = 1


def _fail(kind: str, message: str, code: int) -> int:
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def _configure_logging() -> None:
    level_name = os.environ.get("HYPERCHANGE_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _read_config(path: str) -> dict[str, str]:
    # TOML-style key = value lines; '#' starts a comment
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config {path}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip().strip("\"'")
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperchange",
        description="Commit-size-aware process metrics and hyper co-change centralities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="emit JSONL commit records from a git repo")
    extract.add_argument("--repo", required=True, help="path to a git working copy")
    extract.add_argument(
        "--range",
        dest="ranges",
        action="append",
        required=True,
        metavar="PREV:TAG:RELEASE",
        help="commit range and its release id (repeatable)",
    )
    extract.add_argument("--out", help="output JSONL file (default stdout)")

    features = sub.add_parser("features", help="export a feature matrix CSV")
    features.add_argument("--config", help="key=value config file; flags override it")
    features.add_argument("--commit-log", dest="commit_log", help="JSONL commit records")
    features.add_argument("--corpus", help="product-metric corpus CSV")
    features.add_argument("--release", help="release identifier")
    features.add_argument(
        "--feature-set",
        dest="feature_set",
        choices=[fs.lower() for fs in featureset.FEATURE_SETS],
        help="which feature block to export",
    )
    features.add_argument("--out", help="destination CSV")
    features.add_argument("--manifest", help="release manifest CSV (release_id,ordinal)")
    features.add_argument("--max-commit-size", dest="max_commit_size", type=int)
    features.add_argument("--bins", type=int, help="vector slot count (must equal max commit size)")
    features.add_argument(
        "--source-suffix",
        dest="source_suffixes",
        action="append",
        help="source file suffix (repeatable; default .java)",
    )
    features.add_argument("--strip-prefix", dest="strip_prefix", default=None,
                          help="prefix to strip from corpus paths")
    features.add_argument("--force", action="store_true", help="export even if empty")

    graph = sub.add_parser("graph-export", help="export co-change graph structures")
    graph.add_argument("--commit-log", dest="commit_log", required=True)
    graph.add_argument("--release", required=True)
    graph.add_argument("--manifest")
    graph.add_argument("--max-commit-size", dest="max_commit_size", type=int, default=100)
    graph.add_argument("--source-suffix", dest="source_suffixes", action="append")
    graph.add_argument("--pairwise-out", dest="pairwise_out")
    graph.add_argument("--hypergraph-out", dest="hypergraph_out")

    sub.add_parser("self-test", help="run the built-in worked example")
    return parser


def _ingest_config(args: argparse.Namespace) -> IngestConfig:
    manifest = None
    if getattr(args, "manifest", None):
        manifest = load_release_manifest(args.manifest)
    suffixes = getattr(args, "source_suffixes", None) or [".java"]
    return IngestConfig(
        source_suffixes=tuple(suffixes),
        max_commit_size=getattr(args, "max_commit_size", None) or 100,
        release_ordinals=manifest,
    )


def _cmd_extract(args: argparse.Namespace) -> int:
    tag_pairs = []
    for spec_str in args.ranges:
        parts = spec_str.split(":")
        if len(parts) != 3 or not all(parts):
            return _fail("usage", f"--range must be PREV:TAG:RELEASE, got {spec_str!r}", USAGE_ERROR)
        tag_pairs.append(tuple(parts))
    try:
        records = list(commitlog.extract_from_repository(args.repo, tag_pairs))
    except commitlog.ExtractionError as exc:
        return _fail("extraction", str(exc), DATA_ERROR)
    if args.out:
        Path(args.out).write_text("".join(line + "\n" for line in records))
    else:
        for line in records:
            print(line)
    logger.info("extracted %d commit records", len(records))
    return 0


_CONFIG_KEYS = {
    "commit_log",
    "corpus",
    "release",
    "feature_set",
    "out",
    "manifest",
    "max_commit_size",
    "bins",
    "source_suffixes",
    "strip_prefix",
}


def _merge_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    values = _read_config(args.config)
    unknown = set(values) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, value in values.items():
        if getattr(args, key, None) is not None:
            continue  # flags win
        if key in ("max_commit_size", "bins"):
            setattr(args, key, int(value))
        elif key == "source_suffixes":
            setattr(args, key, [s.strip().strip("\"'") for s in value.strip("[]").split(",") if s.strip()])
        else:
            setattr(args, key, value)


def _cmd_features(args: argparse.Namespace) -> int:
    try:
        _merge_config(args)
    except (OSError, ValueError) as exc:
        return _fail("usage", str(exc), USAGE_ERROR)
    missing = [
        name
        for name, value in (
            ("--commit-log", args.commit_log),
            ("--corpus", args.corpus),
            ("--release", args.release),
            ("--feature-set", args.feature_set),
            ("--out", args.out),
        )
        if not value
    ]
    if missing:
        return _fail("usage", f"missing required options: {', '.join(missing)}", USAGE_ERROR)
    max_size = args.max_commit_size or 100
    bins = args.bins or max_size
    if bins != max_size:
        return _fail(
            "usage",
            f"bins ({bins}) must equal max commit size ({max_size})",
            USAGE_ERROR,
        )
    args.max_commit_size = max_size
    try:
        config = _ingest_config(args)
        with open(args.commit_log) as fh:
            store = ingest_commit_log(fh, config)
        matrix = featureset.build_matrix(
            store,
            args.corpus,
            args.release,
            args.feature_set.upper(),
            strip_prefix=args.strip_prefix or "",
        )
        featureset.export(matrix, args.out, force=args.force)
    except (CommitLogError, featureset.FeatureSetError, HypergraphError, OSError) as exc:
        return _fail("data", str(exc), DATA_ERROR)
    if matrix.reconciliation:
        print(f"reconciliation: {matrix.reconciliation.summary()}", file=sys.stderr)
    print(
        f"wrote {args.out}: {len(matrix.rows)} rows x {matrix.width} feature columns",
        file=sys.stderr,
    )
    return 0


def _cmd_graph_export(args: argparse.Namespace) -> int:
    if not args.pairwise_out and not args.hypergraph_out:
        return _fail("usage", "need --pairwise-out and/or --hypergraph-out", USAGE_ERROR)
    try:
        config = _ingest_config(args)
        with open(args.commit_log) as fh:
            store = ingest_commit_log(fh, config)
        if args.pairwise_out:
            export_edge_list(build_pairwise(store, args.release), args.pairwise_out)
        if args.hypergraph_out:
            export_hypergraph(build_hypergraph(store, args.release), args.hypergraph_out)
    except (CommitLogError, HypergraphError, OSError) as exc:
        return _fail("data", str(exc), DATA_ERROR)
    return 0


# Worked example: two change histories over files F1..F5 whose pairwise
# graphs are indistinguishable (same degree sequence) while hyperedge sizes,
# and therefore vector centralities, differ.
_SET1 = {
    "C1": ["F1", "F2", "F3", "F4"],
    "C2": ["F2", "F4", "F5"],
    "C3": ["F4", "F5"],
    "C4": ["F1", "F2", "F3"],
}
_SET2 = {
    "C1": ["F1", "F2"],
    "C2": ["F4", "F5"],
    "C3": ["F3", "F4"],
    "C4": ["F3", "F5"],
    "C5": ["F1", "F4"],
    "C6": ["F1", "F5"],
    "C7": ["F2", "F4"],
    "C8": ["F2", "F5"],
}


def example_store(commits: dict[str, list[str]], release: str = "r1"):
    """Build a CommitStore for a {sha: [files]} change-set description."""
    import json

    lines = []
    for i, (sha, files) in enumerate(commits.items()):
        lines.append(
            json.dumps(
                {
                    "sha": sha,
                    "author": f"dev{i % 3}",
                    "timestamp": 1_000_000 + i,
                    "release": release,
                    "files": [
                        {"path": f"{name}.java", "added": 1, "deleted": 0}
                        for name in files
                    ],
                }
            )
        )
    return ingest_commit_log(lines)


def _cmd_self_test(_: argparse.Namespace) -> int:
    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        if ok:
            print(f"PASS {name}")
        else:
            failures += 1
            print(f"FAIL {name}{': ' + detail if detail else ''}")

    store1 = example_store(_SET1)
    store2 = example_store(_SET2)

    deg1 = degree_sequence(build_pairwise(store1, "r1"))
    deg2 = degree_sequence(build_pairwise(store2, "r1"))
    check("pairwise degree sequences match", deg1 == deg2 == [2, 3, 3, 4, 4], f"{deg1} vs {deg2}")

    hg1 = build_hypergraph(store1, "r1")
    hg2 = build_hypergraph(store2, "r1")
    sizes1 = sorted((len(e) for e in hg1.hyperedges), reverse=True)
    sizes2 = sorted((len(e) for e in hg2.hyperedges), reverse=True)
    check(
        "hyperedge size multisets differ",
        sizes1 == [4, 3, 3, 2] and sizes2 == [2] * 8,
        f"{sizes1} vs {sizes2}",
    )

    lg1 = line_graph(hg1)
    expected = {
        frozenset(p) for p in (("C1", "C2"), ("C1", "C3"), ("C1", "C4"), ("C2", "C3"), ("C2", "C4"))
    }
    check("line graph adjacency", lg1.edge_pairs() == expected)

    scores = hyperedge_centrality(lg1, "degree")
    expected_scores = {"C1": 0.3, "C2": 0.3, "C3": 0.2, "C4": 0.2}
    check(
        "degree hyperedge scores",
        all(abs(scores[e] - v) < 1e-12 for e, v in expected_scores.items()),
        str(scores),
    )

    vc = vector_centrality(hg1, scores, "degree")
    hand = [
        (vc.slot("F5.java", 2), 0.1),
        (vc.slot("F5.java", 3), 0.1),
        (vc.slot("F1.java", 3), 0.2 / 3),
        (vc.slot("F1.java", 4), 0.075),
    ]
    check(
        "vector centrality hand values",
        all(abs(got - want) < 1e-9 for got, want in hand),
        str(hand),
    )
    check("slot mass totals 1", abs(vc.total_mass() - 1.0) < 1e-9, str(vc.total_mass()))

    if failures:
        print(f"{failures} self-test check(s) failed")
        return 1
    print("self-test: all checks passed")
    return 0


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own message
        return int(exc.code or 0)
    handlers = {
        "extract": _cmd_extract,
        "features": _cmd_features,
        "graph-export": _cmd_graph_export,
        "self-test": _cmd_self_test,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
