"""Synthetic production line with known ground truth.

The generator builds a dense multi-indicator picture of a production line
on a uniform grid and then emits it change-only, exactly the storage
convention the ingest side expects, so generated logs round-trip losslessly
through parse + forward fill.  What is planted, and recorded in
:class:`GroundTruth`:

* 82 candidate indicators (by default) in four groups, each an AR(1)
  process scaled into a group-typical range and quantised;
* a target (draw resistance) that is affine in a few *direct* indicators,
  plus zero-rank-correlation transforms of a few *potential* indicators
  (squares, symmetric bands, products with another potential indicator,
  and cross products with a direct indicator), plus noise;
* a cumulative product counter per shift (for shift detection) with
  spike faults parked in idle stretches, so cleaning restores it exactly;
* a worked-hours counter with mid-shift reset anomalies, kept out of the
  candidate set as a data-quality exhibit only;
* a reject cluster: at sampled points of one shift, two carrier
  indicators are pushed so hard that the target leaves the acceptance
  band, with the per-period counts following a discretised normal.

The natural (non-reject) target excursion is clipped inside the band, so
the reject mask is exactly the planted set; the reject excursion itself
travels through the carrier features and is therefore visible to a model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from drawcast.changelog import DEFAULT_STEP_MS, AlignedFrame, parse_timestamp
from drawcast.sampling import shift_period_ids

TRANSFORMS = ("square", "product-pair", "threshold")

_GROUP_PREFIXES = ("R", "VE", "SE", "MX")
_GROUP_OFFSET = ((7000.0, 2500.0), (100.0, 50.0), (50.0, 30.0), (10.0, 10.0))
_GROUP_SCALE = (300.0, 8.0, 3.0, 1.5)

COUNTER_NAME = "CNT"
HOURS_NAME = "HRS"
TARGET_NAME = "PD"

_BAND_THRESHOLD = 1.0  # |z| cut of the symmetric band transform


class SynthError(ValueError):
    """Invalid generator configuration."""


@dataclass
class SynthConfig:
    """Everything the generator needs; defaults give a two-shift day.

    ``planted_direct`` maps indicator ids to affine coefficients on the
    standardised latent; ``planted_potential`` pairs indicator ids with a
    transform tag from ``{"square", "product-pair", "threshold"}``, with
    product-pair entries consumed two at a time in list order (a trailing
    unpaired one falls back to a square).  ``planted_cross`` adds product
    terms between a direct and a potential indicator, the kind of
    interaction a rank screen cannot see on the potential side.  The first
    two direct entries double as the reject carriers and must stay out of
    every nonlinear term.
    """

    seed: int = 7
    group_sizes: tuple[int, int, int, int] = (7, 20, 30, 25)
    step_ms: int = DEFAULT_STEP_MS
    shift_starts: tuple[str, ...] = ("2022-02-07 07:00:00", "2022-02-07 15:30:00")
    shift_seconds: int = 3600
    lead_seconds: int = 60
    tail_seconds: int = 60
    planted_direct: tuple[tuple[str, float], ...] = (
        ("VE03", 2.2),
        ("SE07", 1.8),
        ("MX11", 1.5),
        ("R02", 1.2),
        ("SE19", 1.0),
        ("VE14", 0.8),
    )
    planted_potential: tuple[tuple[str, str], ...] = (
        ("MX05", "square"),
    )
    planted_cross: tuple[tuple[str, str], ...] = (
        ("MX11", "SE23"),
        ("R02", "VE09"),
    )
    nonlinear_amp: float = 0.9
    noise_sd: float = 0.4
    ar_phi: float = 0.9
    quantize_decimals: int | None = 3
    limit_mu1: float = 1050.0
    limit_sigma1: float = 4.8
    limit_n: float = 3.2
    clip_fraction: float = 0.85
    reject_offset_bands: float = 2.0
    periods_per_shift: int = 50
    reject_mu: float = 25.0
    reject_sigma: float = 1.5
    reject_m1: int = 60
    reject_shift: int = -1
    counter_rate: float = 720.0
    counter_faults: int = 2
    hours_resets: int = 1


@dataclass
class GroundTruth:
    """Dense truth the generator worked from."""

    grid_start_ms: int
    step_ms: int
    length: int
    feature_names: list[str]
    target: np.ndarray
    reject_mask: np.ndarray
    shift_bounds_ms: list[tuple[int, int]]
    planted_direct: list[tuple[str, float]]
    planted_potential: list[tuple[str, str]]
    planted_cross: list[tuple[str, str]]
    product_pairs: list[tuple[str, str]]
    reject_shift: int
    periods_per_shift: int
    limit_mu1: float
    limit_sigma1: float
    limit_n: float
    counter_fault_indices: np.ndarray
    hours_reset_indices: np.ndarray
    counter_name: str = COUNTER_NAME
    hours_name: str = HOURS_NAME
    target_name: str = TARGET_NAME

    @property
    def direct_names(self) -> list[str]:
        return [name for name, _ in self.planted_direct]

    @property
    def potential_names(self) -> list[str]:
        """Potential indicators: own-transform entries plus cross partners."""
        return [name for name, _ in self.planted_potential] + [
            p for _, p in self.planted_cross
        ]


def generate(config: SynthConfig) -> tuple[list[tuple[int, str, float]], GroundTruth]:
    """Emit change-only records plus ground truth.

    Records are ``(epoch_ms, indicator, value)`` sorted by time then
    indicator id; every indicator opens with a record at the first grid
    point.  Byte-identical for a given config.
    """
    frame, gt = generate_frame(config)
    records: list[tuple[int, str, float]] = []
    grid = frame.grid_ms
    for name in sorted(frame.columns):
        col = frame.columns[name]
        keep = np.flatnonzero(np.concatenate(([True], np.diff(col) != 0.0)))
        records.extend((int(grid[k]), name, float(col[k])) for k in keep)
    records.sort(key=lambda rec: (rec[0], rec[1]))
    return records, gt


def generate_frame(config: SynthConfig) -> tuple[AlignedFrame, GroundTruth]:
    """Dense form of :func:`generate`: the aligned frame plus ground truth."""
    layout = _validate(config)
    rng = np.random.default_rng(config.seed)
    names = layout["names"]
    n = layout["length"]
    grid_start = layout["grid_start"]
    spans = layout["spans"]  # per-shift (i0, i1) grid index ranges, production = [i0, i1)

    # latent processes: standardised AR(1) per indicator, fresh per shift
    latents = {name: np.zeros(n) for name in names}
    innov_sd = sqrt(1.0 - config.ar_phi**2)
    for name in names:
        z = latents[name]
        for i0, i1 in spans:
            z[i0] = rng.normal()
            steps = rng.normal(0.0, innov_sd, i1 - i0 - 1)
            for k in range(i0 + 1, i1):
                z[k] = config.ar_phi * z[k - 1] + steps[k - i0 - 1]
            z[i1:] = z[i1 - 1]  # hold through the idle gap

    # reject plan: periods from a discretised normal, distinct points inside
    reject_mask = np.zeros(n, dtype=bool)
    shift_idx = config.reject_shift % len(spans)
    reject_points = _place_rejects(config, spans[shift_idx], rng)
    reject_mask[reject_points] = True
    signs = np.where(rng.random(reject_points.size) < 0.5, -1.0, 1.0)

    # carriers absorb the excursion so that the target moves through them
    band = config.limit_n * config.limit_sigma1
    offset_total = config.reject_offset_bands * band
    (c1_name, c1), (c2_name, c2) = config.planted_direct[:2]
    latents[c1_name][reject_points] += signs * 0.6 * offset_total / c1
    latents[c2_name][reject_points] += signs * 0.4 * offset_total / c2

    # stored feature columns (quantised); effective latents re-derived from them
    columns: dict[str, np.ndarray] = {}
    z_eff: dict[str, np.ndarray] = {}
    for name in names:
        offset, scale = layout["placement"][name]
        col = offset + scale * latents[name]
        if config.quantize_decimals is not None:
            col = np.round(col, config.quantize_decimals)
        columns[name] = col
        z_eff[name] = (col - offset) / scale

    # target: affine in direct latents + centred transforms + noise, clipped
    lin = np.zeros(n)
    for name, coef in config.planted_direct:
        lin += coef * z_eff[name]
    nl = np.zeros(n)
    for kind, members in layout["terms"]:
        if kind == "square":
            z = z_eff[members[0]]
            nl += config.nonlinear_amp * (z * z - 1.0) / sqrt(2.0)
        elif kind == "product":
            nl += config.nonlinear_amp * z_eff[members[0]] * z_eff[members[1]]
        else:  # symmetric band
            z = z_eff[members[0]]
            p = 0.3173  # mass outside one standard deviation
            term = (np.abs(z) > _BAND_THRESHOLD).astype(float) - p
            nl += config.nonlinear_amp * term / sqrt(p * (1.0 - p))
    noise = rng.normal(0.0, config.noise_sd, n) if config.noise_sd > 0 else np.zeros(n)

    natural = lin + nl + noise
    # remove the planted carrier excursion from the clip argument: the
    # excursion must survive clipping, the natural wander must not
    excursion = np.zeros(n)
    excursion[reject_points] = signs * offset_total
    clip_c = config.clip_fraction * band
    target = config.limit_mu1 + np.clip(natural - excursion, -clip_c, clip_c) + excursion
    prod_mask = np.zeros(n, dtype=bool)
    for i0, i1 in spans:
        prod_mask[i0:i1] = True
    target = np.where(prod_mask, target, config.limit_mu1)
    columns[TARGET_NAME] = target

    # the mask must agree with the acceptance band applied to the target
    out_of_band = (target < config.limit_mu1 - band) | (target > config.limit_mu1 + band)
    if not np.array_equal(out_of_band, reject_mask):
        raise SynthError("reject margins violated; widen the band or lower noise")

    counter, fault_idx = _counter_column(config, spans, n, rng)
    columns[COUNTER_NAME] = counter
    hours, reset_idx = _hours_column(config, spans, n, rng)
    columns[HOURS_NAME] = hours

    frame = AlignedFrame(grid_start, config.step_ms, columns, n)
    gt = GroundTruth(
        grid_start_ms=grid_start,
        step_ms=config.step_ms,
        length=n,
        feature_names=list(names),
        target=target,
        reject_mask=reject_mask,
        shift_bounds_ms=[
            (grid_start + i0 * config.step_ms, grid_start + i1 * config.step_ms)
            for i0, i1 in spans
        ],
        planted_direct=list(config.planted_direct),
        planted_potential=list(config.planted_potential),
        planted_cross=list(config.planted_cross),
        product_pairs=layout["product_pairs"],
        reject_shift=shift_idx,
        periods_per_shift=config.periods_per_shift,
        limit_mu1=config.limit_mu1,
        limit_sigma1=config.limit_sigma1,
        limit_n=config.limit_n,
        counter_fault_indices=fault_idx,
        hours_reset_indices=reset_idx,
    )
    return frame, gt


# ---------------------------------------------------------------------------
# pieces
# ---------------------------------------------------------------------------


def _validate(config: SynthConfig) -> dict:
    if len(config.group_sizes) != 4 or any(g < 0 for g in config.group_sizes):
        raise SynthError("group_sizes must be 4 non-negative counts")
    if sum(config.group_sizes) < 2:
        raise SynthError("need at least two candidate indicators")
    if config.step_ms <= 0 or config.shift_seconds <= 0:
        raise SynthError("step and shift duration must be positive")
    if not config.shift_starts:
        raise SynthError("need at least one shift")
    if not 0.0 < config.ar_phi < 1.0:
        raise SynthError("ar_phi must lie in (0, 1)")
    if config.noise_sd < 0:
        raise SynthError("noise_sd must be non-negative")
    if config.limit_sigma1 <= 0 or config.limit_n <= 0:
        raise SynthError("acceptance band must be positive")
    if not 0.0 < config.clip_fraction < 1.0:
        raise SynthError("clip_fraction must lie in (0, 1)")
    if config.reject_offset_bands <= 1.0 + config.clip_fraction:
        raise SynthError(
            "reject_offset_bands must exceed 1 + clip_fraction or excursions may stay in band"
        )
    if config.reject_m1 < 0:
        raise SynthError("reject_m1 must be non-negative")
    if config.periods_per_shift < 1:
        raise SynthError("periods_per_shift must be positive")
    if len(config.planted_direct) < 2:
        raise SynthError("need at least two direct indicators (the reject carriers)")

    names: list[str] = []
    placement: dict[str, tuple[float, float]] = {}
    placement_rng = np.random.default_rng(config.seed + 1)
    for prefix, count, (off_lo, off_span), scale in zip(
        _GROUP_PREFIXES, config.group_sizes, _GROUP_OFFSET, _GROUP_SCALE
    ):
        for i in range(1, count + 1):
            name = f"{prefix}{i:02d}"
            names.append(name)
            placement[name] = (off_lo + off_span * placement_rng.random(), scale)
    reserved = {COUNTER_NAME, HOURS_NAME, TARGET_NAME}
    if reserved & set(names):
        raise SynthError("indicator names collide with reserved columns")

    known = set(names)
    direct_names = [name for name, _ in config.planted_direct]
    for name, coef in config.planted_direct:
        if name not in known:
            raise SynthError(f"planted direct indicator {name!r} does not exist")
        if coef == 0:
            raise SynthError(f"planted direct indicator {name!r} has zero coefficient")
    if len(set(direct_names)) != len(direct_names):
        raise SynthError("duplicate planted direct indicators")
    carriers = set(direct_names[:2])
    terms: list[tuple[str, tuple[str, ...]]] = []
    product_pairs: list[tuple[str, str]] = []
    pending: str | None = None
    for name, kind in config.planted_potential:
        if name not in known:
            raise SynthError(f"planted potential indicator {name!r} does not exist")
        if name in carriers:
            raise SynthError(f"carrier {name!r} cannot carry a nonlinear transform")
        if name in direct_names:
            raise SynthError(f"{name!r} cannot be both direct and potential")
        if kind not in TRANSFORMS:
            raise SynthError(f"unknown transform {kind!r}")
        if kind == "product-pair":
            if pending is None:
                pending = name
            else:
                terms.append(("product", (pending, name)))
                product_pairs.append((pending, name))
                pending = None
        elif kind == "square":
            terms.append(("square", (name,)))
        else:
            terms.append(("band", (name,)))
    if pending is not None:
        terms.append(("square", (pending,)))  # unpaired product falls back
    own_potential = {name for name, _ in config.planted_potential}
    if len(own_potential) != len(config.planted_potential):
        raise SynthError("duplicate planted potential indicators")
    cross_partners = [p for _, p in config.planted_cross]
    if len(set(cross_partners)) != len(cross_partners):
        raise SynthError("duplicate cross indicators")
    for d_name, p_name in config.planted_cross:
        if d_name not in direct_names:
            raise SynthError(f"cross partner {d_name!r} is not a planted direct indicator")
        if d_name in carriers:
            raise SynthError(f"carrier {d_name!r} cannot enter a cross product")
        if p_name not in known:
            raise SynthError(f"cross indicator {p_name!r} does not exist")
        if p_name in direct_names or p_name in own_potential:
            raise SynthError(f"cross indicator {p_name!r} already carries a role")
        terms.append(("product", (d_name, p_name)))
        product_pairs.append((d_name, p_name))

    step = config.step_ms
    starts = sorted(parse_timestamp(s) for s in config.shift_starts)
    grid_start = starts[0] - config.lead_seconds * 1000
    for s in starts:
        if (s - grid_start) % step != 0:
            raise SynthError("shift starts must land on the grid")
    dur = config.shift_seconds * 1000
    spans: list[tuple[int, int]] = []
    prev_end = None
    for s in starts:
        i0 = (s - grid_start) // step
        i1 = i0 + dur // step
        if dur % step != 0:
            raise SynthError("shift duration must be a whole number of steps")
        if prev_end is not None and i0 - prev_end < 2:
            raise SynthError("shifts need at least two idle steps between them")
        spans.append((int(i0), int(i1)))
        prev_end = i1
    length = spans[-1][1] + config.tail_seconds * 1000 // step + 1
    if config.lead_seconds * 1000 // step < 1 or config.tail_seconds * 1000 // step < 1:
        raise SynthError("lead and tail must cover at least one step")

    return {
        "names": names,
        "placement": placement,
        "terms": terms,
        "product_pairs": product_pairs,
        "grid_start": grid_start,
        "spans": spans,
        "length": int(length),
    }


def _place_rejects(
    config: SynthConfig, span: tuple[int, int], rng: np.random.Generator
) -> np.ndarray:
    """Distinct grid points whose per-period counts follow the cluster normal."""
    if config.reject_m1 == 0:
        return np.array([], dtype=np.int64)
    i0, i1 = span
    n_points = i1 - i0
    j1 = config.periods_per_shift
    if n_points < j1:
        raise SynthError("shift too short for the configured period count")
    ids = shift_period_ids(n_points, j1)
    draws = np.clip(
        np.rint(rng.normal(config.reject_mu, config.reject_sigma, config.reject_m1)),
        1,
        j1,
    ).astype(np.int64)
    counts = np.bincount(draws, minlength=j1 + 1)[1:]
    points: list[int] = []
    for pid in np.flatnonzero(counts) + 1:
        pool = np.flatnonzero(ids == pid)
        if counts[pid - 1] > pool.size:
            raise SynthError(
                f"reject cluster denser than period {pid} "
                f"({counts[pid - 1]} rejects, {pool.size} points); lengthen the shift"
            )
        chosen = rng.choice(pool, size=counts[pid - 1], replace=False)
        points.extend(int(i0 + k) for k in chosen)
    return np.array(sorted(points), dtype=np.int64)


def _counter_column(
    config: SynthConfig,
    spans: list[tuple[int, int]],
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    counter = np.zeros(n)
    for i0, i1 in spans:
        counter[i0:i1] = config.counter_rate * np.arange(1, i1 - i0 + 1)
    idle = counter == 0.0
    # spikes sit strictly inside idle stretches, so cleaning restores zeros
    eligible = [
        k
        for k in range(1, n - 1)
        if idle[k] and idle[k - 1] and idle[k + 1]
    ]
    fault_idx: list[int] = []
    for k in rng.permutation(len(eligible)):
        cand = eligible[k]
        if all(abs(cand - kept) > 1 for kept in fault_idx):
            fault_idx.append(cand)
            if len(fault_idx) == config.counter_faults:
                break
    if len(fault_idx) < config.counter_faults:
        raise SynthError("not enough idle room to place counter faults")
    fault_idx.sort()
    for k in fault_idx:
        counter[k] = float(rng.integers(30000, 90000))
    return counter, np.array(fault_idx, dtype=np.int64)


def _hours_column(
    config: SynthConfig,
    spans: list[tuple[int, int]],
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    step_s = config.step_ms / 1000.0
    hours = np.zeros(n)
    for i0, i1 in spans:
        hours[i0:i1] = step_s * np.arange(1, i1 - i0 + 1)
    reset_idx: list[int] = []
    if config.hours_resets > 0:
        interior = np.concatenate(
            [np.arange(i0 + 2, i1 - 2) for i0, i1 in spans if i1 - i0 > 4]
        )
        if interior.size < config.hours_resets:
            raise SynthError("not enough shift interior to place hour resets")
        reset_idx = sorted(
            int(k) for k in rng.choice(interior, config.hours_resets, replace=False)
        )
        for k in reset_idx:
            span = next((s for s in spans if s[0] <= k < s[1]))
            base = float(rng.integers(1, 10))
            hours[k : span[1]] = base + step_s * np.arange(span[1] - k)
    return hours, np.array(reset_idx, dtype=np.int64)
