"""The classifier roster, behind stable string identifiers.

Hyperparameters are library defaults with pinned seeds; nothing here is
tuned. The two boosted-tree entries differ in growth strategy
(histogram-binned leafwise vs. classic depth-wise stagewise).
"""

from __future__ import annotations

import numpy as np
from sklearn.ensemble import (
    GradientBoostingClassifier,
    HistGradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.linear_model import LogisticRegression
from sklearn.svm import SVC

CLASSIFIER_IDS = (
    "logistic-regression",
    "margin-classifier",
    "gradient-boosted-trees-A",
    "gradient-boosted-trees-B",
    "random-forest",
)


class ModelError(Exception):
    """Unknown classifier identifier."""


def make_classifier(classifier_id: str, seed: int):
    """Build a fresh, seeded estimator for the given identifier."""
    if classifier_id == "logistic-regression":
        return LogisticRegression(max_iter=1000)
    if classifier_id == "margin-classifier":
        return SVC(probability=True, random_state=seed)
    if classifier_id == "gradient-boosted-trees-A":
        return HistGradientBoostingClassifier(random_state=seed)
    if classifier_id == "gradient-boosted-trees-B":
        return GradientBoostingClassifier(random_state=seed)
    if classifier_id == "random-forest":
        return RandomForestClassifier(random_state=seed)
    raise ModelError(f"unknown classifier {classifier_id!r} (choose from {', '.join(CLASSIFIER_IDS)})")


def fit_predict_probability(
    classifier_id: str,
    seed: int,
    train_features: np.ndarray,
    train_labels: np.ndarray,
    test_features: np.ndarray,
) -> np.ndarray:
    """Fit on the train split and return P(defective) for the test rows."""
    model = make_classifier(classifier_id, seed)
    model.fit(train_features, train_labels)
    probabilities = model.predict_proba(test_features)
    positive = list(model.classes_).index(1)
    return probabilities[:, positive]
