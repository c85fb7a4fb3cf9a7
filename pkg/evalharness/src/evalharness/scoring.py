"""Classification scores and top-k ranking curves."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from sklearn.metrics import (
    average_precision_score,
    brier_score_loss,
    f1_score,
    matthews_corrcoef,
    roc_auc_score,
)

log = logging.getLogger(__name__)

METRICS = ("auroc", "auprc", "f1", "mcc", "brier")
#: Direction of improvement; Brier is an error, everything else a score.
HIGHER_IS_BETTER = {
    "auroc": True,
    "auprc": True,
    "f1": True,
    "mcc": True,
    "brier": False,
}
DECISION_THRESHOLD = 0.5
MAX_RANK_K = 100


class ScoringError(Exception):
    """Scores were requested for data they are undefined on."""


def classification_scores(labels: np.ndarray, probabilities: np.ndarray) -> dict[str, float]:
    """All five metrics for one test split.

    Ranking metrics need both classes in ``labels``; single-class splits
    must be filtered out by the caller before getting here.
    """
    labels = np.asarray(labels)
    probabilities = np.asarray(probabilities, dtype=float)
    if labels.shape != probabilities.shape:
        raise ScoringError("labels and probabilities disagree on shape")
    if len(np.unique(labels)) < 2:
        raise ScoringError("ranking scores are undefined on a single-class test split")
    if np.any((probabilities < 0.0) | (probabilities > 1.0)):
        raise ScoringError("probabilities must lie in [0, 1]")
    predicted = (probabilities >= DECISION_THRESHOLD).astype(int)
    return {
        "auroc": float(roc_auc_score(labels, probabilities)),
        "auprc": float(average_precision_score(labels, probabilities)),
        "f1": float(f1_score(labels, predicted, zero_division=0)),
        "mcc": float(matthews_corrcoef(labels, predicted)),
        "brier": float(brier_score_loss(labels, probabilities)),
    }


@dataclass(frozen=True)
class RankCurve:
    """precision@k / recall@k for k = 1..len(ks)."""

    ks: tuple[int, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    defective_total: int


def rank_metrics(
    scores: Mapping[str, float],
    labels: Mapping[str, int],
    max_k: int = MAX_RANK_K,
) -> RankCurve:
    """Rank files by descending predicted probability; ties break by path.

    k runs from 1 to min(max_k, file count). With zero defective files
    recall is undefined; it is emitted as 0 with a warning.
    """
    if set(scores) != set(labels):
        raise ScoringError("scores and labels must cover the same files")
    if not scores:
        raise ScoringError("no files to rank")
    ranked = sorted(scores, key=lambda path: (-scores[path], path))
    total_defective = sum(1 for path in labels if labels[path] == 1)
    if total_defective == 0:
        log.warning("no defective files: recall@k emitted as 0")
    limit = min(max_k, len(ranked))
    hits = 0
    precision: list[float] = []
    recall: list[float] = []
    for k in range(1, limit + 1):
        hits += labels[ranked[k - 1]]
        precision.append(hits / k)
        recall.append(hits / total_defective if total_defective else 0.0)
    return RankCurve(tuple(range(1, limit + 1)), tuple(precision), tuple(recall), total_defective)
