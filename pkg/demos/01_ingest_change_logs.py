#!/usr/bin/env python3
"""Walk a hand-written change-only log from raw entries to model samples.

Production telemetry arrives as (timestamp, indicator, value) records that
are written only when a value changes.  This demo builds a one-minute log
by hand so every step is visible at a glance: parsing and coalescing,
forward fill onto a uniform grid, counter cleaning, shift detection and
sample extraction.  Everything is deterministic; there is no randomness
to seed.
"""

from drawcast import (
    align_series,
    build_samples,
    clean_counter,
    detect_shifts,
    forward_fill,
    parse_change_log,
    split_samples,
)
from drawcast.changelog import format_timestamp


def section(title: str) -> None:
    print()
    print(title)
    print("-" * len(title))


def t(sec: int) -> str:
    return f"2022-02-07 08:{sec // 60:02d}:{sec % 60:02d}"


def main() -> None:
    # One minute of line data on a 2 s grid.  The counter CNT counts
    # cigarettes cumulatively inside a shift and reads 0 between shifts;
    # the spike at 08:00:44 is a deliberate logging fault.
    records = []
    records.append((t(0), "CNT", 0.0))
    for sec in range(2, 40, 2):
        records.append((t(sec), "CNT", 24.0 * sec / 2))
    records.append((t(40), "CNT", 0.0))
    records.append((t(44), "CNT", 500000.0))
    records.append((t(46), "CNT", 0.0))
    for sec in range(50, 62, 2):
        records.append((t(sec), "CNT", 30.0 * (sec - 48) / 2))

    # VE01 drifts slowly and its exporter repeats unchanged values; the
    # repeats must vanish in the parsed series.
    records += [
        (t(0), "VE01", 12.4),
        (t(6), "VE01", 12.4),
        (t(10), "VE01", 12.7),
        (t(18), "VE01", 12.7),
        (t(26), "VE01", 13.1),
        (t(48), "VE01", 12.9),
    ]
    records += [
        (t(0), "SE02", 7800.0),
        (t(14), "SE02", 7860.0),
        (t(34), "SE02", 7820.0),
    ]
    records += [(t(s), "PD", v) for s, v in [
        (0, 1048.9), (4, 1049.6), (8, 1050.2), (16, 1049.1),
        (24, 1050.8), (32, 1049.7), (42, 1050.1), (54, 1049.4),
    ]]
    records.sort(key=lambda r: r[0])

    section("parse the interleaved record stream")
    series = parse_change_log(records)
    for name, s in series.items():
        print(f"  {name:5s} {len(s):3d} change entries")
    kept = len(series["VE01"])
    print(f"  VE01 arrived with 6 entries, kept {kept} (repeats coalesced)")

    section("forward fill one indicator onto the 2 s grid")
    ve = series["VE01"]
    filled = forward_fill(ve, t(0), t(14), step_ms=2000)
    for k, v in enumerate(filled):
        print(f"  {format_timestamp(2000 * k + ve.timestamps_ms[0])}  VE01 = {v}")
    print("  a grid point repeats the most recent entry at or before it")

    section("align every indicator on one shared grid")
    frame = align_series(series, step_ms=2000)
    print(f"  {len(frame.columns)} columns x {frame.length} grid points, "
          f"start {format_timestamp(frame.grid_start_ms)}")

    section("clean the cumulative counter")
    raw = frame.columns["CNT"]
    cleaned = clean_counter(raw)
    changed = (raw != cleaned).nonzero()[0]
    for k in changed:
        when = format_timestamp(frame.grid_start_ms + 2000 * int(k))
        print(f"  {when}  {raw[k]:.0f} -> {cleaned[k]:.0f}")
    print("  a jump beyond 2000 sticks per grid step cannot be production")

    section("detect work shifts from the cleaned counter")
    shifts = detect_shifts(cleaned, frame.grid_start_ms, step_ms=2000)
    for w in shifts:
        tag = " (truncated by end of data)" if w.truncated else ""
        print(f"  {w.label:8s} {format_timestamp(w.start_ms)} .. "
              f"{format_timestamp(w.end_ms)}{tag}")

    section("cut model samples out of the first shift")
    samples = build_samples(frame, shifts[0], ["VE01", "SE02"], "PD")
    split = split_samples(samples, train_fraction=0.7)
    tr_X, tr_y = split.train_arrays()
    te_X, te_y = split.test_arrays()
    print(f"  {samples.n_rows} rows, features {samples.feature_names}")
    print(f"  chronological split: {len(tr_y)} train rows, {len(te_y)} test rows")
    print(f"  first train row X = {tr_X[0]}, y = {tr_y[0]}")


if __name__ == "__main__":
    main()
