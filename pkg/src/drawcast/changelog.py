"""Change-log ingestion: from change-only sensor records to model samples.

Production telemetry is stored change-only: an indicator is written to the
log when its value differs from the previous record, so a flat stretch
occupies a single row.  Everything downstream (feature screening, the
regressors, the sampling model) wants a dense matrix on a uniform time
grid, one row per grid point.  This module provides the path between the
two representations:

``parse_change_log``  -> per-indicator :class:`ChangeLogSeries`
``forward_fill``      -> dense vector on a uniform grid
``align_series``      -> :class:`AlignedFrame` (all indicators, one grid)
``clean_counter``     -> zero out impossible jumps in a cumulative counter
``detect_shifts``     -> :class:`ShiftWindow` list from the cleaned counter
``build_samples``     -> :class:`SampleSet` for one shift
``split_samples``     -> train/test tagging (chronological by default)

Timestamps are handled internally as int64 milliseconds since the Unix
epoch; the text formats ``YYYY/MM/DD HH:MM:SS[.mmm]`` and ISO-8601
(``YYYY-MM-DD[ T]HH:MM:SS[.mmm]``) are accepted on input.  Grids are
defined by a start timestamp and a fixed step (default 2000 ms).
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

DEFAULT_STEP_MS = 2000
COUNTER_MAX_STEP = 2000.0

SHIFT_MORNING = "Morning"
SHIFT_MID = "Mid"

CSV_HEADER = ("timestamp", "indicator", "value")


class ChangeLogError(ValueError):
    """Base class for ingest failures."""


class ParseError(ChangeLogError):
    """A record could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OrderingError(ChangeLogError):
    """Timestamps within one indicator went backwards or repeated."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------------------
# timestamps
# ---------------------------------------------------------------------------

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def parse_timestamp(text: str | datetime | int | np.integer) -> int:
    """Return milliseconds since the epoch for a timestamp in any accepted form.

    Accepts ``YYYY/MM/DD HH:MM:SS[.fff]``, ISO-8601 with ``' '`` or ``'T'``
    separators, ``datetime`` objects (naive treated as UTC), and raw epoch
    milliseconds.  Sub-millisecond digits are not accepted.
    """
    if isinstance(text, (int, np.integer)):
        return int(text)
    if isinstance(text, datetime):
        dt = text if text.tzinfo is not None else text.replace(tzinfo=timezone.utc)
        return round((dt - _EPOCH).total_seconds() * 1000)
    s = text.strip().replace("T", " ")
    date_part, _, frac = s.partition(".")
    if frac and (len(frac) > 3 or not frac.isdigit()):
        raise ValueError(f"unsupported fractional seconds in timestamp {text!r}")
    for fmt in ("%Y/%m/%d %H:%M:%S", "%Y-%m-%d %H:%M:%S"):
        try:
            dt = datetime.strptime(date_part, fmt).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
        ms = int(frac.ljust(3, "0")) if frac else 0
        return round((dt - _EPOCH).total_seconds() * 1000) + ms
    raise ValueError(f"unrecognised timestamp {text!r}")


def format_timestamp(ms: int | np.integer, sep: str = " ") -> str:
    """Millisecond-precision ``YYYY-MM-DD HH:MM:SS.mmm`` rendering of epoch ms."""
    ms = int(ms)
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return dt.strftime(f"%Y-%m-%d{sep}%H:%M:%S") + f".{ms % 1000:03d}"


def _local_hour(ms: int) -> int:
    return datetime.fromtimestamp(int(ms) // 1000, tz=timezone.utc).hour


# ---------------------------------------------------------------------------
# series and frames
# ---------------------------------------------------------------------------


@dataclass
class ChangeLogSeries:
    """Change-only history of one indicator.

    Invariants: timestamps strictly increase and consecutive values differ
    (a repeat carries no information under forward fill).  Use
    :meth:`from_entries` to build one from possibly redundant entries; the
    constructor itself rejects violations.
    """

    indicator_id: str
    timestamps_ms: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.timestamps_ms = np.asarray(self.timestamps_ms, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.timestamps_ms.ndim != 1 or self.timestamps_ms.shape != self.values.shape:
            raise ChangeLogError(
                f"{self.indicator_id}: timestamps and values must be equal-length 1-d arrays"
            )
        if self.timestamps_ms.size == 0:
            raise ChangeLogError(f"{self.indicator_id}: empty series")
        dt = np.diff(self.timestamps_ms)
        if np.any(dt <= 0):
            k = int(np.argmax(dt <= 0))
            raise OrderingError(
                k + 2, f"indicator {self.indicator_id!r}: non-increasing timestamp at entry {k + 2}"
            )
        if np.any(np.diff(self.values) == 0.0):
            raise ChangeLogError(
                f"{self.indicator_id}: consecutive equal values violate change-only storage"
            )

    @classmethod
    def from_entries(
        cls, indicator_id: str, entries: Iterable[tuple[object, float]]
    ) -> "ChangeLogSeries":
        """Build a series, coalescing consecutive equal values.

        Entries whose value repeats the previous one are dropped (they are
        redundant under forward fill, and field exports do contain them).
        Timestamps must still strictly increase.
        """
        ts: list[int] = []
        vals: list[float] = []
        for raw_t, raw_v in entries:
            t = parse_timestamp(raw_t)  # type: ignore[arg-type]
            v = float(raw_v)
            if vals and v == vals[-1]:
                if t <= ts[-1]:
                    raise OrderingError(
                        len(ts) + 1,
                        f"indicator {indicator_id!r}: non-increasing timestamp",
                    )
                continue
            ts.append(t)
            vals.append(v)
        if not ts:
            raise ChangeLogError(f"{indicator_id}: empty series")
        return cls(indicator_id, np.array(ts, dtype=np.int64), np.array(vals))

    def __len__(self) -> int:
        return int(self.timestamps_ms.size)


@dataclass
class AlignedFrame:
    """Dense per-indicator columns sharing one uniform time grid."""

    grid_start_ms: int
    step_ms: int
    columns: dict[str, np.ndarray]
    length: int

    def __post_init__(self) -> None:
        if self.step_ms <= 0:
            raise ChangeLogError("grid step must be positive")
        if self.length <= 0:
            raise ChangeLogError("frame must contain at least one grid point")
        for name, col in self.columns.items():
            if len(col) != self.length:
                raise ChangeLogError(
                    f"column {name!r} has {len(col)} rows, expected {self.length}"
                )

    @property
    def grid_ms(self) -> np.ndarray:
        return self.grid_start_ms + self.step_ms * np.arange(self.length, dtype=np.int64)

    def index_of(self, ms: int) -> int:
        """Grid index of a timestamp that lies exactly on the grid."""
        off = int(ms) - self.grid_start_ms
        if off % self.step_ms != 0 or not 0 <= off // self.step_ms < self.length:
            raise ChangeLogError(f"timestamp {format_timestamp(ms)} is not on the grid")
        return off // self.step_ms


@dataclass
class ShiftWindow:
    """One detected work shift: [start, end] grid timestamps plus a label.

    ``end_ms`` is the grid point where the counter fell back to zero; the
    production rows of the shift are the points in [start, end).  A window
    still open at the end of the data is closed there and flagged
    ``truncated``.
    """

    start_ms: int
    end_ms: int
    label: str
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.end_ms <= self.start_ms:
            raise ChangeLogError("shift window must end after it starts")
        if self.label not in (SHIFT_MORNING, SHIFT_MID):
            raise ChangeLogError(f"unknown shift label {self.label!r}")


@dataclass
class SampleSet:
    """Feature matrix plus target for one shift, optionally split-tagged.

    ``split_tags`` is ``None`` until :func:`split_samples` runs; afterwards
    it holds ``'train'``/``'test'`` per row, in unchanged row order.
    """

    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray
    split_tags: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise ChangeLogError("X must be 2-d")
        if self.y.shape != (self.X.shape[0],):
            raise ChangeLogError("y length must match X rows")
        if len(self.feature_names) != self.X.shape[1]:
            raise ChangeLogError("feature_names length must match X columns")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ChangeLogError("duplicate feature names")
        if self.split_tags is not None:
            self.split_tags = np.asarray(self.split_tags)
            if self.split_tags.shape != self.y.shape:
                raise ChangeLogError("split_tags length must match rows")

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])

    def _part(self, tag: str) -> tuple[np.ndarray, np.ndarray]:
        if self.split_tags is None:
            raise ChangeLogError("sample set has not been split")
        mask = self.split_tags == tag
        return self.X[mask], self.y[mask]

    def train_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self._part("train")

    def test_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self._part("test")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def parse_change_log(
    records: Iterable[Sequence[object]], first_line: int = 1
) -> dict[str, ChangeLogSeries]:
    """Group a stream of ``(timestamp, indicator, value)`` records by indicator.

    Records for different indicators may interleave arbitrarily; within one
    indicator timestamps must strictly increase (an exact repeat of the
    previous timestamp is rejected).  Consecutive equal values are coalesced,
    matching the change-only convention.  The result maps indicator id to
    :class:`ChangeLogSeries`, sorted by indicator id.

    Raises :class:`ParseError` (malformed record, with line number) or
    :class:`OrderingError` (timestamp goes backwards within an indicator).
    """
    ts: dict[str, list[int]] = {}
    vals: dict[str, list[float]] = {}
    n = 0
    for n, rec in enumerate(records, start=first_line):
        if len(rec) != 3:
            raise ParseError(n, f"expected 3 fields, got {len(rec)}")
        raw_t, raw_id, raw_v = rec
        indicator = str(raw_id).strip()
        if not indicator:
            raise ParseError(n, "empty indicator id")
        try:
            t = parse_timestamp(raw_t)  # type: ignore[arg-type]
        except ValueError as exc:
            raise ParseError(n, str(exc)) from None
        try:
            v = float(raw_v)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise ParseError(n, f"bad value {raw_v!r} for indicator {indicator!r}") from None
        if not np.isfinite(v):
            raise ParseError(n, f"non-finite value for indicator {indicator!r}")
        seq_t = ts.setdefault(indicator, [])
        seq_v = vals.setdefault(indicator, [])
        if seq_t:
            if t < seq_t[-1]:
                raise OrderingError(
                    n, f"indicator {indicator!r}: timestamp decreases"
                )
            if t == seq_t[-1]:
                raise OrderingError(
                    n, f"indicator {indicator!r}: duplicate timestamp"
                )
            if v == seq_v[-1]:
                continue  # redundant repeat of the held value
        seq_t.append(t)
        seq_v.append(v)
    if not ts:
        raise ChangeLogError("change log contains no records")
    return {
        name: ChangeLogSeries(name, np.array(ts[name], dtype=np.int64), np.array(vals[name]))
        for name in sorted(ts)
    }


def read_change_log_csv(path_or_lines: str | os.PathLike | Iterable[str]) -> dict[str, ChangeLogSeries]:
    """Parse a ``timestamp,indicator,value`` CSV file (header required)."""
    if isinstance(path_or_lines, (str, os.PathLike)):
        with open(path_or_lines, newline="") as fh:
            return read_change_log_csv(list(fh))
    rows = csv.reader(iter(path_or_lines))
    try:
        header = next(rows)
    except StopIteration:
        raise ChangeLogError("change log contains no records") from None
    if tuple(h.strip().lower() for h in header) != CSV_HEADER:
        raise ParseError(1, f"expected header {','.join(CSV_HEADER)!r}")
    return parse_change_log(rows, first_line=2)


def write_change_log_csv(
    records: Iterable[tuple[int, str, float]], path: str | os.PathLike
) -> None:
    """Write ``(epoch_ms, indicator, value)`` records in the log CSV format."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for ms, indicator, value in records:
            stamp = format_timestamp(ms).replace("-", "/")
            fh.write(f"{stamp},{indicator},{value!r}\n")


# ---------------------------------------------------------------------------
# filling and alignment
# ---------------------------------------------------------------------------


def forward_fill(
    series: ChangeLogSeries,
    grid_start: object,
    grid_end: object,
    step_ms: int = DEFAULT_STEP_MS,
) -> np.ndarray:
    """Sample a change-only series onto a uniform grid by forward fill.

    The value at grid point ``t`` is the most recent entry at or before
    ``t``.  The grid runs from ``grid_start`` to ``grid_end`` inclusive with
    ``floor((end - start) / step) + 1`` points.  ``grid_start`` must not
    precede the first entry: values before the first record are unknown and
    are never back-filled.
    """
    start = parse_timestamp(grid_start)  # type: ignore[arg-type]
    end = parse_timestamp(grid_end)  # type: ignore[arg-type]
    if step_ms <= 0:
        raise ChangeLogError("grid step must be positive")
    if end < start:
        raise ChangeLogError("grid end precedes grid start")
    if start < series.timestamps_ms[0]:
        raise ChangeLogError(
            f"{series.indicator_id}: grid starts {format_timestamp(start)}, "
            f"before first entry {format_timestamp(series.timestamps_ms[0])}"
        )
    n = (end - start) // step_ms + 1
    grid = start + step_ms * np.arange(n, dtype=np.int64)
    idx = np.searchsorted(series.timestamps_ms, grid, side="right") - 1
    return series.values[idx]


def align_series(
    series_map: dict[str, ChangeLogSeries],
    step_ms: int = DEFAULT_STEP_MS,
    reference: str | None = None,
    grid_start: object | None = None,
    grid_end: object | None = None,
    threads: int = 1,
) -> AlignedFrame:
    """Forward-fill every indicator onto one shared uniform grid.

    The grid starts at the first record of ``reference`` when given (it is
    an error for any other indicator to start later), else at the latest
    first-entry timestamp across indicators, and ends at the latest entry
    overall.  Explicit ``grid_start``/``grid_end`` override both.  Columns
    are filled independently; ``threads > 1`` fills them in a thread pool,
    which cannot change the result.
    """
    if not series_map:
        raise ChangeLogError("no series to align")
    firsts = {name: s.timestamps_ms[0] for name, s in series_map.items()}
    if grid_start is not None:
        start = parse_timestamp(grid_start)  # type: ignore[arg-type]
    elif reference is not None:
        if reference not in series_map:
            raise ChangeLogError(f"reference indicator {reference!r} not in log")
        start = int(firsts[reference])
    else:
        start = int(max(firsts.values()))
    late = sorted(name for name, t in firsts.items() if t > start)
    if late:
        raise ChangeLogError(
            f"indicators start after the grid: {', '.join(late)}"
        )
    if grid_end is not None:
        end = parse_timestamp(grid_end)  # type: ignore[arg-type]
    else:
        end = int(max(s.timestamps_ms[-1] for s in series_map.values()))
        end = start + ((end - start) // step_ms) * step_ms
    names = sorted(series_map)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(
                pool.map(lambda n: forward_fill(series_map[n], start, end, step_ms), names)
            )
    else:
        cols = [forward_fill(series_map[n], start, end, step_ms) for n in names]
    length = (end - start) // step_ms + 1
    return AlignedFrame(start, step_ms, dict(zip(names, cols)), int(length))


def write_frame_csv(frame: AlignedFrame, path: str | os.PathLike) -> None:
    """Write an aligned frame as CSV: timestamp column then one per indicator."""
    names = list(frame.columns)
    grid = frame.grid_ms
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["timestamp"] + names) + "\n")
        for k in range(frame.length):
            row = ",".join(repr(float(frame.columns[n][k])) for n in names)
            fh.write(f"{format_timestamp(grid[k])},{row}\n")


def read_frame_csv(path: str | os.PathLike) -> AlignedFrame:
    """Read a frame written by :func:`write_frame_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["timestamp"]:
        raise ChangeLogError(f"{path}: not an aligned-frame CSV")
    names = rows[0][1:]
    stamps = np.array([parse_timestamp(r[0]) for r in rows[1:]], dtype=np.int64)
    if stamps.size < 2:
        raise ChangeLogError(f"{path}: need at least two grid rows")
    steps = np.unique(np.diff(stamps))
    if steps.size != 1:
        raise ChangeLogError(f"{path}: grid is not uniform")
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    cols = {name: data[:, j].copy() for j, name in enumerate(names)}
    return AlignedFrame(int(stamps[0]), int(steps[0]), cols, int(stamps.size))


# ---------------------------------------------------------------------------
# counter cleaning and shift detection
# ---------------------------------------------------------------------------


def clean_counter(values: np.ndarray, max_step: float = COUNTER_MAX_STEP) -> np.ndarray:
    """Zero out physically impossible jumps in a cumulative-counter column.

    A production counter can advance by at most ``max_step`` units per grid
    point; any value exceeding its predecessor by more than that is a logging
    fault and is replaced by 0.  Comparison is always against the original
    predecessor, so an isolated spike produces exactly one replacement.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1:
        raise ChangeLogError("counter must be 1-d")
    if max_step <= 0:
        raise ChangeLogError("max_step must be positive")
    out = vals.copy()
    jump = np.diff(vals) > max_step
    out[1:][jump] = 0.0
    return out


def detect_shifts(
    counter: np.ndarray,
    grid_start_ms: int,
    step_ms: int = DEFAULT_STEP_MS,
) -> list[ShiftWindow]:
    """Locate work shifts in a cleaned cumulative counter.

    A shift opens at the first grid point where the counter rises from zero
    to a value in ``(0, max_step]`` with ``max_step`` fixed at 2000 (a
    restart mid-count is not an opening), and closes at the grid point where
    it next drops back to zero.  Start hour before 12:00 labels the shift
    ``Morning``, otherwise ``Mid``.  An open window at the end of data is
    closed at the final grid point and flagged truncated.
    """
    vals = np.asarray(counter, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ChangeLogError("counter must be a non-empty 1-d array")
    windows: list[ShiftWindow] = []
    open_idx: int | None = None
    for k in range(1, vals.size):
        if open_idx is None:
            if vals[k - 1] == 0.0 and 0.0 < vals[k] <= COUNTER_MAX_STEP:
                open_idx = k
        else:
            if vals[k] == 0.0:
                windows.append(_make_window(open_idx, k, grid_start_ms, step_ms))
                open_idx = None
    if open_idx is not None:
        windows.append(
            _make_window(open_idx, vals.size - 1, grid_start_ms, step_ms, truncated=True)
        )
    return windows


def _make_window(
    i0: int, i1: int, grid_start_ms: int, step_ms: int, truncated: bool = False
) -> ShiftWindow:
    start = grid_start_ms + i0 * step_ms
    end = grid_start_ms + i1 * step_ms
    label = SHIFT_MORNING if _local_hour(start) < 12 else SHIFT_MID
    return ShiftWindow(start, end, label, truncated)


def write_shifts_csv(shifts: Sequence[ShiftWindow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("start,end,label\n")
        for w in shifts:
            mark = w.label + ("/truncated" if w.truncated else "")
            fh.write(f"{format_timestamp(w.start_ms)},{format_timestamp(w.end_ms)},{mark}\n")


# ---------------------------------------------------------------------------
# sample construction and splitting
# ---------------------------------------------------------------------------


def build_samples(
    frame: AlignedFrame,
    shift: ShiftWindow,
    feature_names: Sequence[str],
    target_name: str,
) -> SampleSet:
    """One sample per grid point of a shift: features at the point, target at it.

    Rows cover the grid points in ``[shift.start, shift.end)``; the closing
    point belongs to the idle gap and is excluded.  All named columns must
    exist in the frame; missing names are reported together.
    """
    names = list(feature_names)
    if not names:
        raise ChangeLogError("feature list is empty")
    missing = sorted(set(names + [target_name]) - set(frame.columns))
    if missing:
        raise ChangeLogError(f"columns absent from frame: {', '.join(missing)}")
    if len(set(names)) != len(names):
        raise ChangeLogError("duplicate feature names")
    if target_name in names:
        raise ChangeLogError("target cannot also be a feature")
    i0 = frame.index_of(shift.start_ms)
    i1 = frame.index_of(shift.end_ms)
    if i1 <= i0:
        raise ChangeLogError("shift window is empty on this grid")
    X = np.column_stack([frame.columns[n][i0:i1] for n in names])
    y = frame.columns[target_name][i0:i1].copy()
    return SampleSet(names, X, y)


def concat_samples(parts: Sequence[SampleSet]) -> SampleSet:
    """Stack per-shift sample sets in order; feature lists must match exactly.

    Split tags are discarded: a concatenated set is re-split as a whole.
    """
    if not parts:
        raise ChangeLogError("nothing to concatenate")
    names = parts[0].feature_names
    for p in parts[1:]:
        if p.feature_names != names:
            raise ChangeLogError("sample sets disagree on feature names")
    return SampleSet(
        list(names),
        np.vstack([p.X for p in parts]),
        np.concatenate([p.y for p in parts]),
    )


def split_samples(
    samples: SampleSet,
    train_fraction: float = 0.85,
    seed: int | None = None,
    shuffle: bool = False,
) -> SampleSet:
    """Tag rows train/test without reordering them.

    Default is the chronological split: the leading ``train_fraction`` of
    rows is train, the trailing remainder test, so the test segment is the
    most recent production.  ``shuffle=True`` draws the train rows at random
    (seeded); row order is still preserved, only the tags move.
    """
    n = samples.n_rows
    if n < 2:
        raise ChangeLogError("need at least 2 rows to split")
    if not 0.0 < train_fraction < 1.0:
        raise ChangeLogError("train_fraction must be strictly between 0 and 1")
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    tags = np.full(n, "test", dtype=object)
    if shuffle:
        rng = np.random.default_rng(seed)
        tags[rng.permutation(n)[:n_train]] = "train"
    else:
        tags[:n_train] = "train"
    return SampleSet(list(samples.feature_names), samples.X.copy(), samples.y.copy(), tags)
