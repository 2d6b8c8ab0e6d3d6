"""Catch probability of substandard products under different sampling plans.

A shift is divided into ``j1`` equal periods of ``y_s`` products each.  The
quality lab draws ``Z`` distinct products; the question is the probability
that at least one of the ``m`` substandard products lands in the draw.  For
a pool of ``Y`` products containing ``m`` marked ones,

    P = 1 - C(Y - m, Z) / C(Y, Z)

with the cheaper approximation ``P ~= 1 - ((Y - m) / Y) ** Z`` when the
pool is large.  Routine sampling spreads the draw over the whole shift
(``Y = j1 * y_s``).  When the predicted rejects cluster in a few adjacent
periods, fitting a normal profile to the per-period reject counts and
drawing only from the ``j2 = round(2 n sigma)`` periods around its centre
shrinks the pool and lifts the catch probability; ``coverage(n)`` is the
fraction of the cluster such a window holds.

Two conventions for the marked count inside the window are supported:

``"window"``         m2 = coverage(n) * m1  (only the covered fraction)
``"whole-cluster"``  m2 = m1                (cluster treated as inside)

Counts, fits and reports are plain dataclasses; every probability routine
works in log space, so shift-scale pools (millions of products) are exact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import erf, sqrt
from typing import Sequence

import numpy as np
from scipy.special import gammaln

M2_WINDOW = "window"
M2_WHOLE_CLUSTER = "whole-cluster"
_M2_MODES = (M2_WINDOW, M2_WHOLE_CLUSTER)

SIGMA_FLOOR = 0.5


class SamplingError(ValueError):
    """Invalid sampling-plan inputs."""


@dataclass
class SubstandardDistribution:
    """Per-period reject counts for one shift and the fitted normal profile."""

    counts: np.ndarray          # length j1, counts[k] = rejects in period k+1
    m1: int                     # total rejects in the shift
    mu: float                   # count-weighted mean period id (1-based)
    sigma: float                # count-weighted std of period ids, floored
    j1: int
    y_s: int

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.j1,):
            raise SamplingError("counts length must equal j1")
        if int(self.counts.sum()) != self.m1:
            raise SamplingError("m1 must equal the sum of counts")
        if not 1.0 <= self.mu <= float(self.j1):
            raise SamplingError("mu must lie within the period range")
        if self.sigma < SIGMA_FLOOR:
            raise SamplingError(f"sigma below floor {SIGMA_FLOOR}")


@dataclass
class SamplingReport:
    """Side-by-side catch probabilities for the two plans."""

    j1: int
    y_s: int
    z1: int
    n: float
    m1: int
    mu: float
    sigma: float
    j2: int
    z2: int
    m2: float
    m2_mode: str
    coverage: float
    p_old: float
    p_new: float
    delta_p: float


# ---------------------------------------------------------------------------
# histogram and normal fit
# ---------------------------------------------------------------------------


def period_histogram(
    mask: np.ndarray,
    j1: int,
    y_s: int,
    period_ids: np.ndarray | None = None,
) -> SubstandardDistribution:
    """Count flagged entries per period and fit the normal profile.

    ``mask`` holds one boolean per product position.  Without explicit
    ``period_ids`` the mask length must be an exact multiple of ``j1`` and
    is cut into ``j1`` equal consecutive periods; otherwise ``period_ids``
    gives the 1-based period of every mask entry.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 1 or mask.size == 0:
        raise SamplingError("mask must be a non-empty 1-d boolean array")
    if j1 < 1:
        raise SamplingError("j1 must be at least 1")
    if y_s < 1:
        raise SamplingError("y_s must be at least 1")
    if period_ids is None:
        if mask.size % j1 != 0:
            raise SamplingError(
                f"mask length {mask.size} is not a multiple of j1={j1}; "
                "pass period_ids for uneven periods"
            )
        ids = 1 + np.arange(mask.size) // (mask.size // j1)
    else:
        ids = np.asarray(period_ids, dtype=np.int64)
        if ids.shape != mask.shape:
            raise SamplingError("period_ids must match mask length")
        if ids.min() < 1 or ids.max() > j1:
            raise SamplingError("period_ids must lie in [1, j1]")
    counts = np.bincount(ids[mask], minlength=j1 + 1)[1:]
    if counts.sum() == 0:
        # clean shift: nothing to target, both plans catch probability zero
        mu = (j1 + 1) / 2.0
        return SubstandardDistribution(counts, 0, mu, SIGMA_FLOOR, j1, y_s)
    return fit_normal(counts, j1, y_s)


def fit_normal(counts: np.ndarray, j1: int, y_s: int) -> SubstandardDistribution:
    """Fit mu/sigma to per-period counts by count-weighted moments.

    Period ids are 1-based; ``sigma`` is floored at 0.5 so a single-period
    spike still yields a usable window width.  Fewer than two rejects are
    an error: one point fixes no spread, zero fix no cluster at all.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (j1,):
        raise SamplingError("counts length must equal j1")
    if np.any(counts < 0):
        raise SamplingError("counts must be non-negative")
    m1 = int(counts.sum())
    if m1 < 2:
        raise SamplingError("insufficient rejects to fit a cluster profile")
    ids = np.arange(1, j1 + 1, dtype=np.float64)
    mu = float(ids @ counts / m1)
    var = float(((ids - mu) ** 2) @ counts / m1)
    sigma = max(sqrt(var), SIGMA_FLOOR)
    return SubstandardDistribution(counts, m1, mu, sigma, j1, y_s)


def coverage(n: float) -> float:
    """Fraction of a normal cluster inside mu +- n sigma: erf(n / sqrt(2))."""
    if n <= 0:
        raise SamplingError("n must be positive")
    return erf(n / sqrt(2.0))


# ---------------------------------------------------------------------------
# catch probabilities
# ---------------------------------------------------------------------------


def _check_pool(y: int, z: int, m: float) -> None:
    if y < 1:
        raise SamplingError("pool size Y must be at least 1")
    if not 0 <= z <= y:
        raise SamplingError("sample size Z must lie in [0, Y]")
    if m < 0 or m > y:
        raise SamplingError("marked count m must lie in [0, Y]")


def p_sampled_exact(y: int, z: int, m: int) -> float:
    """P(draw of ``z`` distinct from ``y`` hits >= 1 of ``m`` marked), exact.

    Computed as ``1 - exp(log C(y-m, z) - log C(y, z))`` via log-gamma, so
    pools of millions stay exact to double precision.  When ``z > y - m``
    the clean items cannot fill the draw and the probability is exactly 1.
    """
    _check_pool(y, z, m)
    m = int(m)
    if m == 0 or z == 0:
        return 0.0
    if z > y - m:
        return 1.0
    log_miss = (
        _log_choose(y - m, z) - _log_choose(y, z)
    )
    return float(-np.expm1(log_miss))


def _log_choose(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def p_sampled_approx(y: int, z: int, m: float) -> float:
    """Large-pool approximation ``1 - ((y - m) / y) ** z``.

    Unlike the exact form, ``m`` may be fractional (a coverage-scaled
    count).  Accurate when ``z`` and ``m`` are small against ``y``.
    """
    _check_pool(y, z, m)
    if m == 0 or z == 0:
        return 0.0
    if m == y:
        return 1.0
    return float(-np.expm1(z * np.log1p(-m / y)))


def monte_carlo_p(
    y: int, z: int, m: int, trials: int, seed: int | None = None
) -> tuple[float, float]:
    """Simulation estimate of :func:`p_sampled_exact` with its standard error.

    Each trial draws ``z`` distinct items from a pool of ``y`` holding ``m``
    marked ones; the number of marked items drawn is a hypergeometric
    variate, so trials are vectorised.  Returns ``(p_hat, se)`` with
    ``se = sqrt(p_hat (1 - p_hat) / trials)``.
    """
    _check_pool(y, z, m)
    if trials < 1:
        raise SamplingError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    if m == 0 or z == 0:
        return 0.0, 0.0
    hits = rng.hypergeometric(m, y - m, z, size=trials) > 0
    p_hat = float(hits.mean())
    return p_hat, float(sqrt(p_hat * (1.0 - p_hat) / trials))


def p_old(dist: SubstandardDistribution, z1: int) -> float:
    """Catch probability of the routine whole-shift plan."""
    y = dist.j1 * dist.y_s
    return p_sampled_approx(y, z1, dist.m1)


def window_width(dist: SubstandardDistribution, n: float) -> int:
    """Periods in the targeted window: ``round(2 n sigma)``, at least 1."""
    return max(int(round(2.0 * n * dist.sigma)), 1)


def p_new(dist: SubstandardDistribution, z2: int, n: float, m2_mode: str = M2_WINDOW) -> float:
    """Catch probability when drawing only inside the fitted cluster window.

    The window spans ``j2 = round(2 n sigma)`` periods (pool ``j2 * y_s``).
    ``m2_mode`` selects the marked count: ``"window"`` scales ``m1`` by
    ``coverage(n)``; ``"whole-cluster"`` keeps ``m1`` whole.
    """
    if m2_mode not in _M2_MODES:
        raise SamplingError(f"m2_mode must be one of {_M2_MODES}")
    j2 = window_width(dist, n)
    y = j2 * dist.y_s
    m2 = coverage(n) * dist.m1 if m2_mode == M2_WINDOW else float(dist.m1)
    m2 = min(m2, float(y))
    return p_sampled_approx(y, z2, m2)


def delta_p(dist: SubstandardDistribution, z1: int, z2: int, n: float, m2_mode: str = M2_WINDOW) -> float:
    """Gain of the targeted plan over the routine plan."""
    return p_new(dist, z2, n, m2_mode) - p_old(dist, z1)


def build_report(
    dist: SubstandardDistribution,
    z1: int,
    z2: int,
    n: float,
    m2_mode: str = M2_WINDOW,
) -> SamplingReport:
    """Assemble the full comparison for one shift."""
    if m2_mode not in _M2_MODES:
        raise SamplingError(f"m2_mode must be one of {_M2_MODES}")
    j2 = window_width(dist, n)
    cov = coverage(n)
    m2 = cov * dist.m1 if m2_mode == M2_WINDOW else float(dist.m1)
    m2 = min(m2, float(j2 * dist.y_s))
    old = p_old(dist, z1)
    new = p_new(dist, z2, n, m2_mode)
    return SamplingReport(
        j1=dist.j1,
        y_s=dist.y_s,
        z1=z1,
        n=n,
        m1=dist.m1,
        mu=dist.mu,
        sigma=dist.sigma,
        j2=j2,
        z2=z2,
        m2=m2,
        m2_mode=m2_mode,
        coverage=cov,
        p_old=old,
        p_new=new,
        delta_p=new - old,
    )


def write_report(report: SamplingReport, path: str | os.PathLike) -> None:
    """Write a report as two-column ``key,value`` CSV (stable key order)."""
    fields = [
        ("j1", report.j1),
        ("y_s", report.y_s),
        ("z1", report.z1),
        ("n", report.n),
        ("m1", report.m1),
        ("mu", report.mu),
        ("sigma", report.sigma),
        ("j2", report.j2),
        ("z2", report.z2),
        ("m2", report.m2),
        ("m2_mode", report.m2_mode),
        ("coverage", report.coverage),
        ("p_old", report.p_old),
        ("p_new", report.p_new),
        ("delta_p", report.delta_p),
    ]
    with open(path, "w", newline="") as fh:
        fh.write("key,value\n")
        for key, value in fields:
            fh.write(f"{key},{value!r}\n" if isinstance(value, float) else f"{key},{value}\n")


def format_report(report: SamplingReport) -> str:
    """Human-readable report block."""
    lines = [
        f"shift layout      : {report.j1} periods x {report.y_s} products",
        f"rejects           : m1={report.m1}, cluster mu={report.mu:.2f} sigma={report.sigma:.3f}",
        f"routine plan      : Z1={report.z1} over whole shift -> P_old={report.p_old:.3f}",
        (
            f"targeted plan     : j2={report.j2} periods, Z2={report.z2}, "
            f"m2={report.m2:.2f} ({report.m2_mode}) -> P_new={report.p_new:.3f}"
        ),
        f"window coverage   : {report.coverage:.4f} at n={report.n}",
        f"gain              : delta_p={report.delta_p:.3f}",
    ]
    return "\n".join(lines)


def shift_period_ids(n_points: int, j1: int) -> np.ndarray:
    """1-based near-equal period ids for ``n_points`` consecutive positions."""
    if n_points < j1:
        raise SamplingError("fewer points than periods")
    return 1 + (np.arange(n_points, dtype=np.int64) * j1) // n_points
