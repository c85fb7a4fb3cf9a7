"""Rank statistics for paired feature-set comparisons.

Each observation is one dataset-classifier pair; its feature-set scores
are converted to within-row ranks (rank 1 = best). A tie-corrected
chi-square rank test decides whether the feature sets differ at all, and
the critical-distance post-hoc separates pairs whose mean ranks differ
by more than chance would allow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, rankdata

ALPHA = 0.05
MIN_PAIRS = 10
#: Studentized-range-based critical values at alpha = 0.05, by group count.
NEMENYI_Q = {
    2: 1.960,
    3: 2.343,
    4: 2.569,
    5: 2.728,
    6: 2.850,
    7: 2.949,
    8: 3.031,
    9: 3.102,
    10: 3.164,
}


class StatsError(Exception):
    """Rank-test input violates the procedure's requirements."""


class DegenerateTestError(StatsError):
    """Too few groups or paired observations for the test to mean anything."""


def critical_distance(k: int, n: int, alpha: float = ALPHA) -> float:
    """Minimum mean-rank gap that counts as significant for k groups over n pairs."""
    if alpha != ALPHA:
        raise StatsError(f"only alpha = {ALPHA} is tabulated")
    if k not in NEMENYI_Q:
        raise StatsError(f"no critical value tabulated for {k} groups")
    if n < 1:
        raise StatsError("need at least one paired observation")
    return NEMENYI_Q[k] * np.sqrt(k * (k + 1) / (6.0 * n))


@dataclass(frozen=True)
class RankComparison:
    """Outcome of the rank test plus everything a critical-distance plot needs."""

    feature_sets: tuple[str, ...]
    n_pairs: int
    chi_square: float
    p_value: float
    mean_ranks: tuple[float, ...]
    critical_distance: float
    alpha: float = ALPHA

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha

    def separated_pairs(self) -> tuple[tuple[str, str], ...]:
        """Feature-set pairs whose mean ranks differ by at least the critical distance."""
        out = []
        for i, a in enumerate(self.feature_sets):
            for j in range(i + 1, len(self.feature_sets)):
                if abs(self.mean_ranks[i] - self.mean_ranks[j]) >= self.critical_distance:
                    out.append((a, self.feature_sets[j]))
        return tuple(out)

    def as_dict(self) -> dict:
        return {
            "feature_sets": list(self.feature_sets),
            "n_pairs": self.n_pairs,
            "chi_square": self.chi_square,
            "p_value": self.p_value,
            "mean_ranks": list(self.mean_ranks),
            "critical_distance": self.critical_distance,
            "alpha": self.alpha,
            "significant": self.significant,
            "separated_pairs": [list(pair) for pair in self.separated_pairs()],
        }


def friedman_nemenyi(
    scores,
    feature_sets: tuple[str, ...] | list[str],
    higher_is_better: bool = True,
    alpha: float = ALPHA,
) -> RankComparison:
    """Run the rank test over an (n_pairs, n_feature_sets) score matrix.

    Ties take average ranks and the chi-square statistic carries the
    matching correction. A matrix whose rows are all completely tied has
    nothing to test: it comes back with statistic 0 and p = 1.
    """
    matrix = np.asarray(scores, dtype=float)
    feature_sets = tuple(feature_sets)
    if matrix.ndim != 2:
        raise StatsError("score matrix must be 2-dimensional")
    n, k = matrix.shape
    if k != len(feature_sets):
        raise StatsError(f"matrix has {k} columns but {len(feature_sets)} feature sets named")
    if k < 2:
        raise DegenerateTestError("need at least 2 feature sets to compare")
    if n < MIN_PAIRS:
        raise DegenerateTestError(f"need at least {MIN_PAIRS} paired observations, got {n}")
    if not np.all(np.isfinite(matrix)):
        raise StatsError("score matrix contains non-finite values")

    oriented = -matrix if higher_is_better else matrix
    ranks = np.vstack([rankdata(row, method="average") for row in oriented])
    mean_ranks = ranks.mean(axis=0)

    # Tie correction: sum of (t^3 - t) over tie groups of every row.
    tie_mass = 0.0
    for row in oriented:
        _, counts = np.unique(row, return_counts=True)
        tie_mass += float(np.sum(counts**3 - counts))
    correction = 1.0 - tie_mass / (n * k * (k**2 - 1))

    numerator = 12.0 * n / (k * (k + 1)) * float(np.sum((mean_ranks - (k + 1) / 2.0) ** 2))
    if correction <= 0.0:
        # Every row fully tied: identical columns, nothing to distinguish.
        statistic, p_value = 0.0, 1.0
    else:
        statistic = numerator / correction
        p_value = float(chi2.sf(statistic, k - 1))

    return RankComparison(
        feature_sets=feature_sets,
        n_pairs=n,
        chi_square=float(statistic),
        p_value=float(p_value),
        mean_ranks=tuple(float(v) for v in mean_ranks),
        critical_distance=critical_distance(k, n, alpha),
        alpha=alpha,
    )
