"""Out-of-sample bootstrap draws and minority-class oversampling."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

SMOTE_NEIGHBORS = 5


class ResampleError(Exception):
    """A resampling step received data it cannot work with."""


def draw_bootstrap(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw n row indices with replacement; return (train, out_of_bag).

    The out-of-bag indices are the rows never drawn, sorted ascending.
    For large n about 36.8% of rows land out of bag.
    """
    if n < 1:
        raise ResampleError("cannot resample an empty dataset")
    train = rng.integers(0, n, size=n)
    mask = np.ones(n, dtype=bool)
    mask[train] = False
    return train, np.nonzero(mask)[0]


def out_of_bag_fraction(n: int, resamples: int, rng: np.random.Generator) -> float:
    """Mean fraction of rows left out of bag over repeated draws."""
    total = 0
    for _ in range(resamples):
        total += len(draw_bootstrap(n, rng)[1])
    return total / (resamples * n)


def smote_balance(
    features: np.ndarray,
    labels: np.ndarray,
    rng: np.random.Generator,
    k_neighbors: int = SMOTE_NEIGHBORS,
) -> tuple[np.ndarray, np.ndarray]:
    """Oversample the minority class to exact balance by interpolation.

    Each synthetic row lies on the segment between a random minority row
    and one of its k nearest minority neighbors (k shrinks when the
    minority class is smaller than k+1; a lone minority row is
    duplicated). Synthetic rows are appended after the originals, so the
    caller's test rows are never touched.
    """
    labels = np.asarray(labels)
    if features.shape[0] != labels.shape[0]:
        raise ResampleError("features and labels disagree on row count")
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2:
        raise ResampleError("cannot balance a single-class sample")
    if len(classes) > 2:
        raise ResampleError("expected binary labels")
    minority = classes[np.argmin(counts)]
    deficit = int(abs(counts[0] - counts[1]))
    if deficit == 0:
        return features, labels
    pool = features[labels == minority]
    n_min = len(pool)
    if n_min == 1:
        synthetic = np.repeat(pool, deficit, axis=0)
    else:
        k = min(k_neighbors, n_min - 1)
        # Argsort over the full distance matrix; column 0 is the row itself.
        order = np.argsort(cdist(pool, pool), axis=1, kind="stable")
        neighbors = order[:, 1 : k + 1]
        base = rng.integers(0, n_min, size=deficit)
        picked = neighbors[base, rng.integers(0, k, size=deficit)]
        gaps = rng.random(deficit)[:, None]
        synthetic = pool[base] + gaps * (pool[picked] - pool[base])
    out_features = np.vstack([features, synthetic])
    out_labels = np.concatenate([labels, np.full(deficit, minority, dtype=labels.dtype)])
    return out_features, out_labels
