"""Command-line entry points for the evaluation harness.

Exit codes: 0 success, 1 data problems (unreadable or inconsistent
inputs, degenerate datasets), 2 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DatasetError
from .experiment import (
    DEFAULT_K_FEATURES,
    DEFAULT_RESAMPLES,
    ExperimentError,
    ExperimentSpec,
    bootstrap_evaluate,
)
from .models import CLASSIFIER_IDS, ModelError
from .resampling import ResampleError, out_of_bag_fraction, smote_balance
from .scoring import METRICS, HIGHER_IS_BETTER, ScoringError, classification_scores, rank_metrics
from .selection import SelectionError, hsic_select
from .stats import StatsError, critical_distance, friedman_nemenyi
from .summary import (
    SummaryError,
    merge_results,
    paired_matrix,
    read_scores_csv,
    summarize,
)

USAGE_ERROR = 2
DATA_ERROR = 1

_DATA_ERRORS = (
    DatasetError,
    ExperimentError,
    ModelError,
    ResampleError,
    ScoringError,
    SelectionError,
    StatsError,
    SummaryError,
    OSError,
)


def _fail(kind: str, message: str, code: int) -> int:
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def _configure_logging() -> None:
    level = os.environ.get("EVALHARNESS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evalharness",
        description="Bootstrap evaluation and rank statistics over exported feature matrices.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate one project's feature matrices")
    run.add_argument("--project", required=True)
    run.add_argument(
        "--matrix",
        action="append",
        required=True,
        metavar="FEATURESET=PATH",
        help="feature set id and its CSV; repeat per feature set",
    )
    run.add_argument("--classifiers", default=",".join(CLASSIFIER_IDS),
                     help="comma-separated classifier ids")
    run.add_argument("--resamples", type=int, default=DEFAULT_RESAMPLES)
    run.add_argument("--k-features", type=int, default=DEFAULT_K_FEATURES)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="results CSV destination")
    run.add_argument("--raw-out", help="optional per-resample scores CSV")
    run.add_argument("--scores-out", help="optional per-file mean probability CSV")

    stats = sub.add_parser("stats", help="rank test over merged results")
    stats.add_argument("--results", action="append", required=True)
    stats.add_argument("--metric", required=True, choices=METRICS)
    stats.add_argument("--out", help="JSON destination (default: stdout)")

    summ = sub.add_parser("summarize", help="comparison tables, tests, and plots")
    summ.add_argument("--results", action="append", required=True)
    summ.add_argument("--out-dir", required=True)
    summ.add_argument("--baseline", help="feature set to take percentage differences against")
    summ.add_argument("--scores", help="per-file score CSV for precision/recall@k plots")

    rank = sub.add_parser("rank", help="precision@k / recall@k curve from per-file scores")
    rank.add_argument("--scores", required=True)
    rank.add_argument("--project")
    rank.add_argument("--classifier")
    rank.add_argument("--feature-set")
    rank.add_argument("--out", help="curve CSV destination (default: stdout)")

    sub.add_parser("self-test", help="run built-in oracle checks")
    return parser


def _parse_matrices(entries: list[str]) -> dict[str, str]:
    matrices: dict[str, str] = {}
    for entry in entries:
        fs_id, sep, path = entry.partition("=")
        if not sep or not fs_id or not path:
            raise ValueError(f"--matrix expects FEATURESET=PATH, got {entry!r}")
        if fs_id in matrices:
            raise ValueError(f"--matrix repeats feature set {fs_id!r}")
        matrices[fs_id] = path
    return matrices


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        matrices = _parse_matrices(args.matrix)
        classifiers = tuple(c.strip() for c in args.classifiers.split(",") if c.strip())
        spec = ExperimentSpec(
            project=args.project,
            matrices=matrices,
            classifiers=classifiers,
            resamples=args.resamples,
            k_features=args.k_features,
            seed=args.seed,
        )
    except (ValueError, ExperimentError) as exc:
        return _fail("usage", str(exc), USAGE_ERROR)
    sink: dict | None = {} if args.scores_out else None
    try:
        table = bootstrap_evaluate(spec, file_score_sink=sink)
        table.to_csv(args.out)
        if args.raw_out:
            table.raw_to_csv(args.raw_out)
        if args.scores_out:
            with open(args.scores_out, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["project", "classifier", "feature_set", "path", "label", "score"])
                label_of = _label_lookup(spec)
                for (classifier, feature_set), per_path in sorted(sink.items()):
                    for path in sorted(per_path):
                        writer.writerow(
                            [
                                spec.project,
                                classifier,
                                feature_set,
                                path,
                                label_of[path],
                                "%.12g" % per_path[path],
                            ]
                        )
    except _DATA_ERRORS as exc:
        return _fail("data", str(exc), DATA_ERROR)
    completed = table.completed[spec.project]
    skipped = table.skipped[spec.project]
    print(
        f"wrote {args.out}: {len(classifiers)} classifiers x {len(matrices)} feature sets, "
        f"{completed} resamples scored ({skipped} skipped)",
        file=sys.stderr,
    )
    return 0


def _label_lookup(spec: ExperimentSpec) -> dict[str, int]:
    from .dataset import load_feature_table

    first = next(iter(spec.matrices.values()))
    table = load_feature_table(first)
    return {path: int(label) for path, label in zip(table.paths, table.labels)}


def _cmd_stats(args: argparse.Namespace) -> int:
    try:
        results = merge_results(args.results)
        feature_sets: list[str] = []
        for (_p, _c, fs, _m) in results:
            if fs not in feature_sets:
                feature_sets.append(fs)
        matrix, cells = paired_matrix(results, args.metric, feature_sets)
        comparison = friedman_nemenyi(
            matrix, tuple(feature_sets), higher_is_better=HIGHER_IS_BETTER[args.metric]
        )
    except _DATA_ERRORS as exc:
        return _fail("data", str(exc), DATA_ERROR)
    payload = {"metric": args.metric, "n_pairs": len(cells), **comparison.as_dict()}
    rendered = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(rendered)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(rendered)
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    try:
        results = merge_results(args.results)
        score_rows = read_scores_csv(args.scores) if args.scores else None
        report = summarize(results, args.out_dir, baseline=args.baseline, score_rows=score_rows)
    except _DATA_ERRORS as exc:
        return _fail("data", str(exc), DATA_ERROR)
    print(
        f"wrote {Path(args.out_dir) / 'summary.json'} and {len(report.plots)} plots",
        file=sys.stderr,
    )
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    try:
        rows = read_scores_csv(args.scores)
        for field in ("project", "classifier", "feature_set"):
            wanted = getattr(args, field)
            if wanted is not None:
                rows = [row for row in rows if row[field] == wanted]
        if not rows:
            raise SummaryError("no score rows left after filtering")
        groups = {(row["project"], row["classifier"], row["feature_set"]) for row in rows}
        if len(groups) > 1:
            raise SummaryError(
                f"scores span {len(groups)} groups; narrow with --project/--classifier/--feature-set"
            )
        curve = rank_metrics(
            {row["path"]: row["score"] for row in rows},
            {row["path"]: row["label"] for row in rows},
        )
        sink = open(args.out, "w", newline="") if args.out else sys.stdout
        try:
            writer = csv.writer(sink, lineterminator="\n")
            writer.writerow(["k", "precision", "recall"])
            for k, precision, recall in zip(curve.ks, curve.precision, curve.recall):
                writer.writerow([k, "%.12g" % precision, "%.12g" % recall])
        finally:
            if sink is not sys.stdout:
                sink.close()
    except _DATA_ERRORS as exc:
        return _fail("data", str(exc), DATA_ERROR)
    if args.out:
        print(f"wrote {args.out}: {len(curve.ks)} rows", file=sys.stderr)
    return 0


def _cmd_self_test(_args: argparse.Namespace) -> int:
    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"[{status}] {name}{suffix}")
        if not ok:
            failures += 1

    perfect = classification_scores(
        np.array([1, 1, 0, 0, 1, 0]), np.array([0.95, 0.9, 0.1, 0.05, 0.85, 0.2])
    )
    check(
        "perfect predictions score 1.0 everywhere, Brier near 0",
        all(abs(perfect[m] - 1.0) < 1e-9 for m in ("auroc", "auprc", "f1", "mcc"))
        and perfect["brier"] < 0.05,
    )

    constant = classification_scores(
        np.array([1, 0, 1, 0]), np.array([0.5, 0.5, 0.5, 0.5])
    )
    check("constant classifier has MCC 0", abs(constant["mcc"]) < 1e-12)

    cd = critical_distance(3, 45)
    check("critical distance for 3 sets over 45 pairs ~ 0.494", abs(cd - 0.494) < 1e-3,
          f"cd={cd:.4f}")

    rng = np.random.default_rng(7)
    fraction = out_of_bag_fraction(1000, 60, rng)
    check("out-of-bag fraction near 1/e", abs(fraction - 0.368) < 0.03, f"mean={fraction:.4f}")

    rng = np.random.default_rng(11)
    features = rng.normal(size=(40, 6))
    labels = np.array([1] * 8 + [0] * 32)
    balanced_x, balanced_y = smote_balance(features, labels, rng)
    counts = np.bincount(balanced_y)
    check("oversampling balances classes exactly", counts[0] == counts[1] == 32,
          f"counts={counts.tolist()}")

    picked = hsic_select(rng.normal(size=(40, 12)), labels, 40)
    check("selector returns min(k, width) features", len(picked) == 12 and len(set(picked)) == 12)

    if failures:
        print(f"self-test: {failures} check(s) failed")
        return 1
    print("self-test: all checks passed")
    return 0


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    handlers = {
        "run": _cmd_run,
        "stats": _cmd_stats,
        "summarize": _cmd_summarize,
        "rank": _cmd_rank,
        "self-test": _cmd_self_test,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
