"""Shared evaluation report and specification-limit flagging."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np


class MetricsError(ValueError):
    """Invalid prediction/target vectors."""


@dataclass
class Metrics:
    """MSE, its square root, and the Pearson correlation of pred vs target."""

    mse: float
    rmse: float
    r: float


@dataclass
class SpecLimits:
    """Acceptance band mu1 +- n * sigma1 for the predicted draw resistance."""

    mu1: float
    sigma1: float
    n: float

    def __post_init__(self) -> None:
        if self.sigma1 <= 0:
            raise MetricsError("sigma1 must be positive")
        if self.n <= 0:
            raise MetricsError("n must be positive")

    @property
    def low(self) -> float:
        return self.mu1 - self.n * self.sigma1

    @property
    def high(self) -> float:
        return self.mu1 + self.n * self.sigma1


def evaluate_predictions(predictions: np.ndarray, targets: np.ndarray) -> Metrics:
    """Evaluate a prediction vector against targets.

    ``mse`` is the mean squared error, ``rmse`` its exact square root, and
    ``r`` the Pearson correlation coefficient.  Constant predictions or
    targets leave the correlation undefined and raise.
    """
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1:
        raise MetricsError("predictions and targets must be equal-length 1-d arrays")
    if p.size < 2:
        raise MetricsError("need at least 2 points")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise MetricsError("non-finite values in predictions or targets")
    err = p - t
    mse = float(err @ err / p.size)
    dp = p - p.mean()
    dt = t - t.mean()
    denom = sqrt(float(dp @ dp) * float(dt @ dt))
    if denom == 0.0:
        raise MetricsError("correlation undefined: constant predictions or targets")
    r = float(np.clip(dp @ dt / denom, -1.0, 1.0))
    return Metrics(mse=mse, rmse=sqrt(mse), r=r)


def flag_substandard(predictions: np.ndarray, limits: SpecLimits) -> np.ndarray:
    """Boolean mask of predictions outside ``[mu1 - n sigma1, mu1 + n sigma1]``.

    Endpoints are acceptable; widening ``n`` can only clear flags, never add
    them.
    """
    p = np.asarray(predictions, dtype=np.float64)
    if p.ndim != 1:
        raise MetricsError("predictions must be 1-d")
    if not np.all(np.isfinite(p)):
        raise MetricsError("non-finite predictions cannot be flagged")
    return (p < limits.low) | (p > limits.high)
