"""Kernel-based independence feature screening.

Ranks features by how much their Gaussian-kernel similarity structure
aligns with the label kernel, while discounting features whose kernel
structure is already explained by earlier picks. Concretely: per data
block, each feature's centered and Frobenius-normalized Gram matrix is
flattened into a column of a design matrix, the label's normalized delta
kernel becomes the target vector, and features enter greedily with a
nonnegative least-squares refit after every pick (a matching-pursuit
solve of the nonnegative kernel regression). Blockwise kernels keep the
design matrix linear in the sample count.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls

BLOCK_SIZE = 20


class SelectionError(Exception):
    """The selector received data it cannot rank."""


def _normalized_gram(kernel: np.ndarray) -> np.ndarray:
    """Double-center a Gram slice and scale it to unit Frobenius norm.

    kernel has shape (m, m, d): one m-by-m Gram matrix per feature.
    Features whose centered kernel vanishes (constant columns) come back
    as all-zero and can never be picked on merit.
    """
    centered = (
        kernel
        - kernel.mean(axis=0, keepdims=True)
        - kernel.mean(axis=1, keepdims=True)
        + kernel.mean(axis=(0, 1), keepdims=True)
    )
    norms = np.sqrt((centered**2).sum(axis=(0, 1)))
    norms[norms == 0.0] = 1.0
    return centered / norms


def _block_design(features: np.ndarray, labels: np.ndarray, block_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-block flattened kernels into (design, target)."""
    n, d = features.shape
    # z-score per feature so one Gaussian width fits all of them
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[std == 0.0] = 1.0
    z = (features - mean) / std

    design_rows: list[np.ndarray] = []
    target_rows: list[np.ndarray] = []
    for start in range(0, n, block_size):
        zb = z[start : start + block_size]
        yb = labels[start : start + block_size]
        m = len(zb)
        if m < 2:
            continue  # a 1-row block centers to nothing
        sq = (zb[:, None, :] - zb[None, :, :]) ** 2
        gram = _normalized_gram(np.exp(-0.5 * sq))
        design_rows.append(gram.reshape(m * m, d))

        same = yb[:, None] == yb[None, :]
        label_kernel = np.zeros((m, m))
        for cls in np.unique(yb):
            count = int(np.sum(yb == cls))
            label_kernel[same & (yb[:, None] == cls)] = 1.0 / count
        target_rows.append(_normalized_gram(label_kernel[:, :, None]).reshape(m * m))
    if not design_rows:
        raise SelectionError("not enough rows to form even one kernel block")
    return np.vstack(design_rows), np.concatenate(target_rows)


def hsic_select(
    features: np.ndarray,
    labels: np.ndarray,
    k: int,
    block_size: int = BLOCK_SIZE,
) -> tuple[int, ...]:
    """Return the indices of the top min(k, width) features, in pick order.

    Deterministic for fixed inputs. When the positive residual
    correlations run out before k picks (degenerate data), the remainder
    is filled by marginal alignment score, then by column index, so the
    promised count always comes back.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if features.ndim != 2:
        raise SelectionError("feature matrix must be 2-dimensional")
    if features.shape[0] != labels.shape[0]:
        raise SelectionError("features and labels disagree on row count")
    if k < 1:
        raise SelectionError("k must be at least 1")
    d = features.shape[1]
    if d == 0:
        raise SelectionError("no feature columns to select from")
    budget = min(k, d)

    design, target = _block_design(features, labels, block_size)
    marginal = design.T @ target

    active: list[int] = []
    residual = target
    while len(active) < budget:
        correlation = design.T @ residual
        correlation[active] = -np.inf
        pick = int(np.argmax(correlation))
        if correlation[pick] <= 1e-12:
            # Nothing left that aligns with what remains of the target.
            order = np.argsort(-marginal, kind="stable")
            fill = [int(j) for j in order if j not in set(active)]
            active.extend(fill[: budget - len(active)])
            break
        active.append(pick)
        coef, _ = nnls(design[:, active], target)
        residual = target - design[:, active] @ coef
    return tuple(active)
