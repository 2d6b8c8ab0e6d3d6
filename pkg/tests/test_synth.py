"""Synthetic production line: round trips, planted structure, faults."""

import numpy as np
import pytest

from drawcast.changelog import align_series, clean_counter, detect_shifts, parse_change_log
from drawcast.features import spearman_rho
from drawcast.predictors import SpecLimits, flag_substandard
from drawcast.synth import SynthConfig, SynthError, generate, generate_frame


def light_config(**overrides):
    """Small two-shift line for fast per-seed loops."""
    base = dict(
        shift_starts=("2022-02-07 07:00:00", "2022-02-07 07:12:00"),
        shift_seconds=300,
        periods_per_shift=10,
        reject_mu=5.0,
        reject_sigma=1.5,
        reject_m1=20,
    )
    base.update(overrides)
    return SynthConfig(**base)


def span_indices(gt):
    """Production spans as grid index pairs."""
    return [
        ((s - gt.grid_start_ms) // gt.step_ms, (e - gt.grid_start_ms) // gt.step_ms)
        for s, e in gt.shift_bounds_ms
    ]


def production_mask(gt):
    mask = np.zeros(gt.length, dtype=bool)
    for i0, i1 in span_indices(gt):
        mask[i0:i1] = True
    return mask


class TestRoundTrip:
    def test_records_refill_to_the_frame(self, default_synth):
        """Emit change records, re-ingest, forward fill: bit-equal columns."""
        frame, gt = default_synth
        records, gt2 = generate(SynthConfig())
        series_map = parse_change_log(records)
        grid_end = gt.grid_start_ms + (gt.length - 1) * gt.step_ms
        refilled = align_series(
            series_map, step_ms=gt.step_ms, grid_start=gt.grid_start_ms, grid_end=grid_end
        )
        assert refilled.length == frame.length
        assert set(refilled.columns) == set(frame.columns)
        assert len(frame.columns) == 85
        for name in frame.columns:
            np.testing.assert_array_equal(refilled.columns[name], frame.columns[name])

    def test_same_seed_is_byte_identical(self):
        cfg = light_config()
        r1, _ = generate(cfg)
        r2, _ = generate(cfg)
        assert r1 == r2

    def test_different_seed_differs(self):
        r1, _ = generate(light_config(seed=1))
        r2, _ = generate(light_config(seed=2))
        assert r1 != r2


class TestPlantedTarget:
    def test_zero_noise_target_is_affine_in_the_planted_columns(self):
        """No noise, no nonlinear terms: the target regresses exactly."""
        frame, gt = generate_frame(
            light_config(
                noise_sd=0.0,
                quantize_decimals=None,
                planted_direct=(("VE03", 2.0), ("SE07", 1.0)),
                planted_potential=(),
                planted_cross=(),
                reject_m1=0,
            )
        )
        mask = production_mask(gt)
        A = np.column_stack(
            [np.ones(mask.sum()), frame.columns["VE03"][mask], frame.columns["SE07"][mask]]
        )
        y = frame.columns[gt.target_name][mask]
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        assert np.abs(A @ coef - y).max() < 1e-9

    def test_idle_region_sits_at_nominal(self):
        frame, gt = generate_frame(light_config())
        y = frame.columns[gt.target_name]
        idle = ~production_mask(gt)
        assert idle.any()
        np.testing.assert_array_equal(y[idle], np.full(idle.sum(), gt.limit_mu1))

    def test_reject_mask_agrees_with_the_acceptance_band(self, default_synth):
        frame, gt = default_synth
        limits = SpecLimits(gt.limit_mu1, gt.limit_sigma1, gt.limit_n)
        flags = flag_substandard(frame.columns[gt.target_name], limits)
        np.testing.assert_array_equal(flags, gt.reject_mask)

    def test_reject_cluster_lands_in_the_chosen_shift(self, default_synth):
        frame, gt = default_synth
        cfg = SynthConfig()
        assert gt.reject_mask.sum() == cfg.reject_m1
        spans = span_indices(gt)
        carrier = spans[gt.reject_shift % len(spans)]
        assert gt.reject_mask[carrier[0] : carrier[1]].sum() == cfg.reject_m1
        for k, (i0, i1) in enumerate(spans):
            if k != gt.reject_shift % len(spans):
                assert gt.reject_mask[i0:i1].sum() == 0

    def test_planted_signal_beats_noise_indicators(self):
        """|rho| of the strongest planted column exceeds a bystander's."""
        wins = 0
        for seed in range(20):
            frame, gt = generate_frame(light_config(seed=seed))
            mask = production_mask(gt)
            y = frame.columns[gt.target_name][mask]
            planted_names = (
                {n for n, _ in gt.planted_direct}
                | {n for n, _ in gt.planted_potential}
                | set(np.ravel(gt.planted_cross))
            )
            bystander = next(n for n in gt.feature_names if n not in planted_names)
            strongest = gt.planted_direct[0][0]
            r_plant = abs(spearman_rho(frame.columns[strongest][mask], y))
            r_noise = abs(spearman_rho(frame.columns[bystander][mask], y))
            wins += r_plant > r_noise
        assert wins >= 17


class TestServiceColumns:
    def test_counter_faults_are_idle_spikes_that_clean_away(self):
        frame, gt = generate_frame(light_config(counter_faults=3))
        raw = frame.columns[gt.counter_name]
        assert gt.counter_fault_indices.size == 3
        assert (raw[gt.counter_fault_indices] >= 30_000).all()
        cleaned = clean_counter(raw)
        expected = raw.copy()
        expected[gt.counter_fault_indices] = 0.0
        np.testing.assert_array_equal(cleaned, expected)

    def test_detected_shifts_match_the_declared_bounds(self):
        frame, gt = generate_frame(light_config())
        cleaned = clean_counter(frame.columns[gt.counter_name])
        shifts = detect_shifts(cleaned, gt.grid_start_ms, gt.step_ms)
        assert [(w.start_ms, w.end_ms) for w in shifts] == list(gt.shift_bounds_ms)
        assert not any(w.truncated for w in shifts)

    def test_hours_resets_break_the_ramp(self):
        frame, gt = generate_frame(light_config(hours_resets=2))
        hours = frame.columns[gt.hours_name]
        assert gt.hours_reset_indices.size == 2
        spans = span_indices(gt)
        for k in gt.hours_reset_indices:
            assert any(i0 < k < i1 for i0, i1 in spans)
            assert 1.0 <= hours[k] < 10.0


class TestValidation:
    def test_carrier_cannot_go_nonlinear(self):
        with pytest.raises(SynthError, match="carrier 'VE03' cannot carry"):
            generate(light_config(planted_potential=(("VE03", "square"),)))

    def test_cross_partner_must_be_direct(self):
        with pytest.raises(SynthError, match="cross partner 'MX05' is not"):
            generate(light_config(planted_cross=(("MX05", "SE23"),)))

    def test_unknown_transform_rejected(self):
        with pytest.raises(SynthError, match="unknown transform 'cubic'"):
            generate(light_config(planted_potential=(("MX05", "cubic"),)))

    def test_offset_band_must_clear_the_clip(self):
        with pytest.raises(SynthError, match="reject_offset_bands must exceed"):
            generate(light_config(clip_fraction=0.9, reject_offset_bands=1.8))

    def test_needs_two_carriers(self):
        with pytest.raises(SynthError, match="at least two direct indicators"):
            generate(light_config(planted_direct=(("VE03", 2.0),), planted_cross=()))

    def test_cluster_denser_than_a_period_is_rejected(self):
        with pytest.raises(SynthError, match="reject cluster denser than period"):
            generate(light_config(reject_m1=500, reject_sigma=0.1))

    def test_ar_phi_bounds(self):
        with pytest.raises(SynthError, match="ar_phi"):
            generate(light_config(ar_phi=1.0))
