"""Two-stage screening of candidate indicators.

Stage one ranks every indicator by the absolute Spearman rank correlation
with the target and keeps the top ``ceil(direct_fraction * N)`` as the
*direct* set: indicators whose monotone influence shows up directly.
Stage two fits a random-forest regressor on all indicators and, among
those not already taken, keeps the top
``ceil(potential_fraction * remaining)`` by impurity importance as the
*potential* set: indicators whose influence is real but not monotone
(squares, interactions, bands), which rank correlation cannot see.

With 82 candidate indicators and the default fractions (0.30 / 0.24) the
stages keep 25 and 14 indicators respectively.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import ceil
from typing import Sequence

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from drawcast.changelog import SampleSet

DIRECT_FRACTION = 0.30
POTENTIAL_FRACTION = 0.24
RF_TREES = 20
RF_MIN_LEAF = 5


class FeatureSelectError(ValueError):
    """Invalid inputs to the screening stages."""


@dataclass
class FeatureScores:
    """Per-indicator screening scores, aligned with ``names``."""

    names: list[str]
    spearman_abs: np.ndarray
    rf_importance: np.ndarray

    def __post_init__(self) -> None:
        self.spearman_abs = np.asarray(self.spearman_abs, dtype=np.float64)
        self.rf_importance = np.asarray(self.rf_importance, dtype=np.float64)
        n = len(self.names)
        if self.spearman_abs.shape != (n,) or self.rf_importance.shape != (n,):
            raise FeatureSelectError("score arrays must match names length")


@dataclass
class FeatureSelection:
    """Outcome of the two-stage screen; the sets never overlap."""

    direct: list[str]
    potential: list[str]
    scores: FeatureScores

    def __post_init__(self) -> None:
        if set(self.direct) & set(self.potential):
            raise FeatureSelectError("direct and potential sets overlap")

    @property
    def combined(self) -> list[str]:
        return list(self.direct) + list(self.potential)


@dataclass
class Forest:
    """Wrapper pinning the screening forest's contract onto sklearn.

    ``degenerate`` marks a forest grown on a constant target: every tree is
    a single leaf and all importances are zero.
    """

    model: RandomForestRegressor
    feature_names: list[str]
    degenerate: bool

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.model.predict(np.asarray(X, dtype=np.float64))


# ---------------------------------------------------------------------------
# rank correlation
# ---------------------------------------------------------------------------


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions.

    ``[10, 20, 20, 5] -> [2.0, 3.5, 3.5, 1.0]``.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise FeatureSelectError("ranks need a non-empty 1-d array")
    if not np.all(np.isfinite(v)):
        raise FeatureSelectError("ranks need finite values")
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sorted_v = v[order]
    # walk runs of equal values, assigning each run its mean position
    start = 0
    for stop in range(1, v.size + 1):
        if stop == v.size or sorted_v[stop] != sorted_v[start]:
            ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
            start = stop
    return ranks


def spearman_rho(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman correlation: Pearson correlation of the average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise FeatureSelectError("inputs must be equal-length 1-d arrays")
    if x.size < 2:
        raise FeatureSelectError("need at least 2 observations")
    rx = average_ranks(x)
    ry = average_ranks(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = np.sqrt((sx @ sx) * (sy @ sy))
    if denom == 0.0:
        raise FeatureSelectError("correlation undefined: an input is constant")
    return float(np.clip(sx @ sy / denom, -1.0, 1.0))


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------


def fit_random_forest(
    samples: SampleSet,
    n_trees: int = RF_TREES,
    min_leaf: int = RF_MIN_LEAF,
    seed: int | None = None,
) -> Forest:
    """Fit the screening forest: variance-reduction trees on bootstrap rows.

    Each split considers ``sqrt(d)`` candidate features and leaves hold at
    least ``min_leaf`` rows; the fit is deterministic for a given seed.  A
    constant target yields a degenerate single-leaf forest, flagged.
    """
    if n_trees < 1 or min_leaf < 1:
        raise FeatureSelectError("n_trees and min_leaf must be positive")
    if samples.n_rows < 2 * min_leaf:
        raise FeatureSelectError("too few rows to grow leaves of the requested size")
    model = RandomForestRegressor(
        n_estimators=n_trees,
        min_samples_leaf=min_leaf,
        max_features="sqrt",
        bootstrap=True,
        random_state=seed,
    )
    model.fit(samples.X, samples.y)
    degenerate = bool(np.all(samples.y == samples.y[0]))
    return Forest(model, list(samples.feature_names), degenerate)


def rf_importances(forest: Forest) -> np.ndarray:
    """Normalised impurity-reduction importances (sum 1, or all 0 if no splits)."""
    imp = np.asarray(forest.model.feature_importances_, dtype=np.float64)
    total = imp.sum()
    if total <= 0.0:
        return np.zeros_like(imp)
    return imp / total


# ---------------------------------------------------------------------------
# two-stage selection
# ---------------------------------------------------------------------------


def score_features(samples: SampleSet, seed: int | None = None) -> FeatureScores:
    """Compute both screening scores for every feature column."""
    rho = np.empty(len(samples.feature_names))
    for j in range(samples.X.shape[1]):
        col = samples.X[:, j]
        if np.all(col == col[0]):
            rho[j] = 0.0  # a constant indicator carries no ordering signal
        else:
            rho[j] = abs(spearman_rho(col, samples.y))
    forest = fit_random_forest(samples, seed=seed)
    return FeatureScores(list(samples.feature_names), rho, rf_importances(forest))


def select_features(
    scores: FeatureScores,
    direct_fraction: float = DIRECT_FRACTION,
    potential_fraction: float = POTENTIAL_FRACTION,
) -> FeatureSelection:
    """Apply the two-stage cut to precomputed scores.

    Direct: top ``ceil(direct_fraction * N)`` by absolute rank correlation.
    Potential: among the rest, top ``ceil(potential_fraction * remaining)``
    by forest importance.  Ties break lexically on indicator id, so the
    outcome is deterministic and growing a fraction never drops a member
    chosen at a smaller one.
    """
    if not 0.0 < direct_fraction < 1.0 or not 0.0 < potential_fraction < 1.0:
        raise FeatureSelectError("fractions must lie strictly between 0 and 1")
    n = len(scores.names)
    if n == 0:
        raise FeatureSelectError("no features to select from")
    n_direct = min(ceil(direct_fraction * n), n)
    direct = _top_k(scores.names, scores.spearman_abs, n_direct)
    rest = [name for name in scores.names if name not in set(direct)]
    n_potential = min(ceil(potential_fraction * len(rest)), len(rest)) if rest else 0
    if n_potential:
        keep = {name: i for i, name in enumerate(scores.names)}
        rest_scores = np.array([scores.rf_importance[keep[name]] for name in rest])
        potential = _top_k(rest, rest_scores, n_potential)
    else:
        potential = []
    return FeatureSelection(direct, potential, scores)


def _top_k(names: Sequence[str], score: np.ndarray, k: int) -> list[str]:
    # sort by score descending, then id ascending; stable and total
    order = sorted(range(len(names)), key=lambda i: (-score[i], names[i]))
    return [names[i] for i in order[:k]]


def write_scores_csv(
    selection: FeatureSelection, path: str | os.PathLike
) -> None:
    """Indicator scores and set membership, one row per indicator."""
    scores = selection.scores
    direct = set(selection.direct)
    potential = set(selection.potential)
    with open(path, "w", newline="") as fh:
        fh.write("indicator,spearman_abs,rf_importance,set\n")
        for i, name in enumerate(scores.names):
            tag = "direct" if name in direct else "potential" if name in potential else "-"
            fh.write(
                f"{name},{scores.spearman_abs[i]!r},{scores.rf_importance[i]!r},{tag}\n"
            )
