import json
import logging

import numpy as np
import pytest

from evalharness.scoring import METRICS
from evalharness.summary import (
    SummaryError,
    best_performer_shares,
    complete_cells,
    mean_rank_curves,
    merge_results,
    paired_matrix,
    percentage_differences,
    read_results_csv,
    read_scores_csv,
    summarize,
)

SETS = ["PR+SP", "PR+VP", "PR+VP+VC"]


def synthetic_results(n_projects=4, n_classifiers=3, seed=0):
    """Mean scores where PR+VP+VC > PR+VP > PR+SP on every score metric."""
    rng = np.random.default_rng(seed)
    results = {}
    for p in range(n_projects):
        for c in range(n_classifiers):
            for metric in METRICS:
                base = 0.4 + 0.1 * rng.random()
                lift = 0.05 + 0.02 * rng.random()
                values = [base, base + lift, base + 2 * lift]
                if metric == "brier":
                    values = [0.3 - (v - base) for v in values]  # lower is better
                for fs, value in zip(SETS, values):
                    results[(f"proj{p}", f"clf{c}", fs, metric)] = (value, 0.01)
    return results


def results_to_csv(results, dest):
    import csv

    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["project", "classifier", "feature_set", "metric", "mean", "std"])
        for (project, classifier, fs, metric), (mean, std) in results.items():
            writer.writerow([project, classifier, fs, metric, "%.12g" % mean, "%.12g" % std])
    return dest


def test_results_csv_round_trip(tmp_path):
    results = synthetic_results(n_projects=2, n_classifiers=2)
    dest = results_to_csv(results, tmp_path / "r.csv")
    loaded = read_results_csv(dest)
    assert set(loaded) == set(results)
    for key in results:
        assert loaded[key][0] == pytest.approx(results[key][0])


def test_results_csv_validation(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("a,b,c\n")
    with pytest.raises(SummaryError, match="header"):
        read_results_csv(bad_header)
    bad_metric = tmp_path / "m.csv"
    bad_metric.write_text(
        "project,classifier,feature_set,metric,mean,std\np,c,F,accuracy,0.5,0\n"
    )
    with pytest.raises(SummaryError, match="unknown metric"):
        read_results_csv(bad_metric)
    dupe = tmp_path / "d.csv"
    dupe.write_text(
        "project,classifier,feature_set,metric,mean,std\n"
        "p,c,F,auroc,0.5,0\np,c,F,auroc,0.6,0\n"
    )
    with pytest.raises(SummaryError, match="duplicate"):
        read_results_csv(dupe)
    with pytest.raises(SummaryError, match="cannot read"):
        read_results_csv(tmp_path / "absent.csv")


def test_merge_rejects_overlaps(tmp_path):
    results = synthetic_results(n_projects=1, n_classifiers=1)
    a = results_to_csv(results, tmp_path / "a.csv")
    b = results_to_csv(results, tmp_path / "b.csv")
    with pytest.raises(SummaryError, match="duplicate result rows"):
        merge_results([a, b])


def test_best_performer_shares_with_clear_winner():
    results = synthetic_results()
    shares = best_performer_shares(results, "auroc", SETS)
    assert shares["PR+VP+VC"] == pytest.approx(1.0)
    assert shares["PR+SP"] == pytest.approx(0.0)
    # direction flips for the error metric, same winner
    assert best_performer_shares(results, "brier", SETS)["PR+VP+VC"] == pytest.approx(1.0)


def test_exact_tie_splits_credit():
    results = {
        ("p", "c", "A", "auroc"): (0.7, 0.0),
        ("p", "c", "B", "auroc"): (0.7, 0.0),
        ("p", "c", "C", "auroc"): (0.5, 0.0),
    }
    shares = best_performer_shares(results, "auroc", ["A", "B", "C"])
    assert shares["A"] == pytest.approx(0.5)
    assert shares["B"] == pytest.approx(0.5)
    assert shares["C"] == pytest.approx(0.0)


def test_percentage_difference_worked_example():
    results = {
        ("p", "c", "PR+SP", "auroc"): (0.50, 0.0),
        ("p", "c", "PR+VP", "auroc"): (0.55, 0.0),
    }
    diffs = percentage_differences(results, "auroc", "PR+SP", ["PR+SP", "PR+VP"])
    assert diffs["PR+VP"] == [pytest.approx(10.0)]


def test_zero_baseline_cell_is_excluded(caplog):
    results = {
        ("p", "c", "A", "mcc"): (0.0, 0.0),
        ("p", "c", "B", "mcc"): (0.5, 0.0),
        ("q", "c", "A", "mcc"): (0.2, 0.0),
        ("q", "c", "B", "mcc"): (0.4, 0.0),
    }
    with caplog.at_level(logging.WARNING):
        diffs = percentage_differences(results, "mcc", "A", ["A", "B"])
    assert diffs["B"] == [pytest.approx(100.0)]
    assert any("baseline" in r.message for r in caplog.records)


def test_complete_cells_tracks_missing_combinations():
    results = synthetic_results(n_projects=2, n_classifiers=2)
    del results[("proj0", "clf0", "PR+VP", "auroc")]
    complete, seen = complete_cells(results, "auroc", SETS)
    assert len(seen) == 4
    assert len(complete) == 3
    assert ("proj0", "clf0") not in complete


def test_paired_matrix_shape_and_order():
    results = synthetic_results(n_projects=5, n_classifiers=2)
    matrix, cells = paired_matrix(results, "f1", SETS)
    assert matrix.shape == (10, 3)
    assert np.all(matrix[:, 2] > matrix[:, 0])
    assert cells[0] == ("proj0", "clf0")


def test_mean_rank_curves_average_over_groups():
    rows = []
    for project in ("p1", "p2"):
        for i in range(30):
            rows.append(
                {
                    "project": project,
                    "classifier": "clf",
                    "feature_set": "A",
                    "path": f"f{i:02d}",
                    "label": 1 if i < 10 else 0,
                    "score": 1.0 - i * 0.01,
                }
            )
    curves = mean_rank_curves(rows)
    assert set(curves) == {"A"}
    assert curves["A"].ks[-1] == 30
    assert curves["A"].precision[9] == pytest.approx(1.0)


def test_summarize_writes_report_and_plots(tmp_path):
    results = synthetic_results()  # 12 cells >= 10, so rank tests run
    report = summarize(results, tmp_path / "figs")
    assert report.baseline == "PR+SP"
    assert report.shares["auroc"]["PR+VP+VC"] == pytest.approx(1.0)
    assert report.tests["auroc"]["p_value"] < 0.05
    assert report.tests["auroc"]["mean_ranks"][2] == pytest.approx(1.0)
    assert report.coverage["auroc"] == {"cells_used": 12, "cells_seen": 12}
    payload = json.loads((tmp_path / "figs" / "summary.json").read_text())
    assert payload["baseline"] == "PR+SP"
    assert payload["percentage_difference_vs_baseline"]["auroc"]["PR+VP"]["mean"] > 0
    for name in report.plots:
        target = tmp_path / "figs" / name
        assert target.exists() and target.stat().st_size > 0
    expected = {f"{kind}_{metric}.png" for kind in ("box", "pie", "cd") for metric in METRICS}
    assert expected <= set(report.plots)


def test_summarize_skips_rank_test_when_too_few_pairs(tmp_path):
    results = synthetic_results(n_projects=2, n_classifiers=2)  # 4 cells < 10
    report = summarize(results, tmp_path / "figs")
    assert "skipped" in report.tests["auroc"]
    assert report.shares["auroc"]["PR+VP+VC"] == pytest.approx(1.0)


def test_summarize_notes_partial_coverage(tmp_path, caplog):
    results = synthetic_results()
    del results[("proj0", "clf0", "PR+VP+VC", "auroc")]
    with caplog.at_level(logging.WARNING):
        report = summarize(results, tmp_path / "figs")
    assert report.coverage["auroc"] == {"cells_used": 11, "cells_seen": 12}
    assert any("missing a feature set" in r.message for r in caplog.records)


def test_summarize_with_rank_curves(tmp_path):
    results = synthetic_results()
    rows = [
        {
            "project": "p",
            "classifier": "c",
            "feature_set": fs,
            "path": f"f{i:03d}",
            "label": i % 2,
            "score": (1.0 - i * 0.005) if fs != "PR+SP" else 0.5,
        }
        for fs in SETS
        for i in range(120)
    ]
    report = summarize(results, tmp_path / "figs", score_rows=rows)
    assert "precision_at_k.png" in report.plots
    assert "recall_at_k.png" in report.plots


def test_summarize_rejects_unknown_baseline(tmp_path):
    with pytest.raises(SummaryError, match="baseline"):
        summarize(synthetic_results(), tmp_path / "figs", baseline="PR+XX")


def test_scores_csv_round_trip(tmp_path):
    dest = tmp_path / "scores.csv"
    dest.write_text(
        "project,classifier,feature_set,path,label,score\n"
        "p,c,A,f1.java,1,0.75\n"
        "p,c,A,f2.java,0,0.25\n"
    )
    rows = read_scores_csv(dest)
    assert rows[0]["score"] == pytest.approx(0.75)
    assert rows[1]["label"] == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("project,classifier,feature_set,path,label,score\np,c,A,f,2,0.5\n")
    with pytest.raises(SummaryError, match="label"):
        read_scores_csv(bad)
