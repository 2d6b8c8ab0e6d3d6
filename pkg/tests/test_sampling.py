"""Catch-probability model: histograms, normal fits, exact and approximate draws."""

from itertools import combinations
from math import sqrt

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from drawcast.sampling import (
    SIGMA_FLOOR,
    SamplingError,
    SubstandardDistribution,
    build_report,
    coverage,
    delta_p,
    fit_normal,
    format_report,
    monte_carlo_p,
    p_new,
    p_old,
    p_sampled_approx,
    p_sampled_exact,
    period_histogram,
    shift_period_ids,
    window_width,
    write_report,
)

# reference shift: 100 periods of 43200 products, lab draw 200, 99% window
J1, Y_S, Z, N_SIGMA = 100, 43200, 200, 2.576


def spike_dist(m1, mu, sigma, j1=J1, y_s=Y_S):
    """Distribution with declared moments; counts kept consistent as one spike."""
    counts = np.zeros(j1, dtype=np.int64)
    counts[int(round(mu)) - 1] = m1
    return SubstandardDistribution(counts, m1, mu, sigma, j1, y_s)


class TestPeriodHistogram:
    def test_clustered_mask(self):
        mask = np.zeros(1000, dtype=bool)
        mask[300:320] = True  # all rejects inside period 4 of 10
        dist = period_histogram(mask, j1=10, y_s=100)
        assert dist.m1 == 20
        assert dist.counts[3] == 20 and dist.counts.sum() == 20
        assert dist.mu == 4.0
        assert dist.sigma == SIGMA_FLOOR

    def test_explicit_period_ids_match_default_cut(self):
        rng = np.random.default_rng(0)
        mask = rng.random(500) < 0.05
        ids = 1 + np.arange(500) // 50
        a = period_histogram(mask, j1=10, y_s=50)
        b = period_histogram(mask, j1=10, y_s=50, period_ids=ids)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert a.mu == b.mu and a.sigma == b.sigma

    def test_clean_mask_is_a_valid_empty_profile(self):
        dist = period_histogram(np.zeros(300, dtype=bool), j1=10, y_s=30)
        assert dist.m1 == 0
        assert dist.mu == 5.5
        assert dist.sigma == SIGMA_FLOOR
        report = build_report(dist, z1=20, z2=20, n=2.0)
        assert report.p_old == 0.0 and report.p_new == 0.0 and report.delta_p == 0.0

    def test_single_reject_cannot_fix_a_profile(self):
        mask = np.zeros(300, dtype=bool)
        mask[7] = True
        with pytest.raises(SamplingError, match="insufficient rejects"):
            period_histogram(mask, j1=10, y_s=30)

    def test_validation(self):
        mask = np.zeros(10, dtype=bool)
        with pytest.raises(SamplingError, match="not a multiple of j1=3"):
            period_histogram(mask, j1=3, y_s=10)
        with pytest.raises(SamplingError, match="period_ids must match"):
            period_histogram(mask, j1=2, y_s=5, period_ids=np.ones(9, dtype=int))
        with pytest.raises(SamplingError, match=r"lie in \[1, j1\]"):
            period_histogram(mask, j1=2, y_s=5, period_ids=np.full(10, 3))
        with pytest.raises(SamplingError, match="non-empty 1-d"):
            period_histogram(np.zeros(0, dtype=bool), j1=1, y_s=1)
        with pytest.raises(SamplingError, match="j1 must be"):
            period_histogram(mask, j1=0, y_s=1)
        with pytest.raises(SamplingError, match="y_s must be"):
            period_histogram(mask, j1=2, y_s=0)


class TestFitNormal:
    def test_symmetric_counts_centre_mu(self):
        counts = np.zeros(21, dtype=np.int64)
        counts[[8, 10, 12]] = [5, 8, 5]
        dist = fit_normal(counts, j1=21, y_s=100)
        assert dist.mu == 11.0
        assert dist.sigma == pytest.approx(sqrt(2.0 * 5 * 4 / 18.0))

    def test_single_period_spike_floors_sigma(self):
        counts = np.zeros(50, dtype=np.int64)
        counts[24] = 400
        dist = fit_normal(counts, j1=50, y_s=100)
        assert dist.sigma == SIGMA_FLOOR

    def test_discretised_normal_recovers_moments(self):
        # expected counts of N(30, 1.16^2) over unit-width period bins
        edges = np.arange(0.5, J1 + 1)
        cell = np.diff(norm.cdf(edges, loc=30.0, scale=1.16))
        counts = np.round(1055 * cell).astype(np.int64)
        dist = fit_normal(counts, j1=J1, y_s=Y_S)
        assert dist.m1 == pytest.approx(1055, abs=5)
        assert dist.mu == pytest.approx(30.0, abs=0.01)
        # binning adds ~1/12 of variance, still well inside the tolerance
        assert dist.sigma == pytest.approx(1.16, abs=0.15)

    def test_sampled_clusters_recover_moments(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            draws = np.clip(np.round(rng.normal(40.0, 3.0, size=600)), 1, J1)
            counts = np.bincount(draws.astype(np.int64), minlength=J1 + 1)[1:]
            dist = fit_normal(counts, j1=J1, y_s=Y_S)
            assert abs(dist.mu - 40.0) < 0.5
            assert abs(dist.sigma - 3.0) / 3.0 < 0.15

    def test_too_few_rejects(self):
        counts = np.zeros(10, dtype=np.int64)
        for total in (0, 1):
            counts[3] = total
            with pytest.raises(SamplingError, match="insufficient rejects"):
                fit_normal(counts, j1=10, y_s=100)

    def test_validation(self):
        with pytest.raises(SamplingError, match="counts length"):
            fit_normal(np.zeros(9, dtype=np.int64), j1=10, y_s=100)
        bad = np.zeros(10, dtype=np.int64)
        bad[0], bad[1] = 5, -1
        with pytest.raises(SamplingError, match="non-negative"):
            fit_normal(bad, j1=10, y_s=100)

    def test_distribution_invariants_enforced(self):
        counts = np.zeros(10, dtype=np.int64)
        counts[4] = 7
        with pytest.raises(SamplingError, match="m1 must equal"):
            SubstandardDistribution(counts, 8, 5.0, 1.0, 10, 100)
        with pytest.raises(SamplingError, match="mu must lie"):
            SubstandardDistribution(counts, 7, 11.0, 1.0, 10, 100)
        with pytest.raises(SamplingError, match="sigma below floor"):
            SubstandardDistribution(counts, 7, 5.0, 0.4, 10, 100)


class TestCoverage:
    def test_standard_values(self):
        assert coverage(1.0) == pytest.approx(0.682689, abs=1e-6)
        assert coverage(2.576) == pytest.approx(0.990005, abs=1e-6)

    def test_matches_density_quadrature(self):
        for n in (0.5, 1.0, 1.96, 2.576, 3.5):
            mass, _ = quad(norm.pdf, -n, n)
            assert coverage(n) == pytest.approx(mass, abs=1e-6)

    def test_strictly_increasing(self):
        grid = np.linspace(0.1, 5.0, 60)
        vals = np.array([coverage(n) for n in grid])
        assert np.all(np.diff(vals) > 0.0)

    def test_saturates(self):
        assert coverage(6.0) >= 1.0 - 1e-8

    def test_needs_positive_width(self):
        with pytest.raises(SamplingError, match="n must be positive"):
            coverage(0.0)


def brute_force_p(y, z, m):
    """Enumerate every draw of z items; marked items are 0..m-1."""
    hits = sum(1 for draw in combinations(range(y), z) if min(draw) < m)
    total = sum(1 for _ in combinations(range(y), z))
    return hits / total


class TestExactProbability:
    def test_small_pool_hand_value(self):
        # 1 - C(9,2)/C(10,2) = 1 - 36/45
        assert p_sampled_exact(10, 2, 1) == pytest.approx(0.2, abs=1e-12)

    def test_matches_enumeration(self):
        y = 8
        for z in range(0, y + 1):
            for m in range(0, y + 1):
                expect = brute_force_p(y, z, m) if z and m else 0.0
                assert p_sampled_exact(y, z, m) == pytest.approx(expect, abs=1e-10)

    def test_reference_shift_scale(self):
        assert p_sampled_exact(J1 * Y_S, Z, 1055) == pytest.approx(0.0477, abs=0.0005)

    def test_edge_cases(self):
        assert p_sampled_exact(100, 0, 5) == 0.0
        assert p_sampled_exact(100, 5, 0) == 0.0
        assert p_sampled_exact(100, 99, 2) == 1.0  # clean items cannot fill the draw
        assert p_sampled_exact(100, 1, 100) == 1.0

    def test_monotone_in_draw_and_marked(self):
        probs_z = [p_sampled_exact(10000, z, 50) for z in (10, 50, 200, 1000)]
        assert np.all(np.diff(probs_z) > 0.0)
        probs_m = [p_sampled_exact(10000, 100, m) for m in (1, 5, 25, 100)]
        assert np.all(np.diff(probs_m) > 0.0)

    def test_validation(self):
        with pytest.raises(SamplingError, match="pool size"):
            p_sampled_exact(0, 0, 0)
        with pytest.raises(SamplingError, match="sample size"):
            p_sampled_exact(10, 11, 0)
        with pytest.raises(SamplingError, match="marked count"):
            p_sampled_exact(10, 2, 11)


class TestApproxProbability:
    def test_small_pool_hand_value(self):
        # 1 - (9/10)^2
        assert p_sampled_approx(10, 2, 1) == pytest.approx(0.19, abs=1e-12)

    def test_close_to_exact_at_shift_scale(self):
        y = J1 * Y_S
        assert abs(p_sampled_approx(y, Z, 1055) - p_sampled_exact(y, Z, 1055)) < 1e-4

    def test_error_bound_sweep(self):
        # replacement vs no-replacement gap shrinks as z*m/y does; the 1e-7
        # slack absorbs log-gamma rounding on million-item pools
        for y in (10_000, 100_000, 1_000_000):
            for z in (10, 100, 400):
                for m in (1, 20, 200):
                    gap = abs(p_sampled_approx(y, z, m) - p_sampled_exact(y, z, m))
                    assert gap <= z * m * m / y**2 + z * z * m / y**2 + 1e-7

    def test_fractional_marked_count(self):
        p = p_sampled_approx(1000, 50, 2.5)
        assert 0.0 < p < 1.0
        assert p == pytest.approx(1.0 - (1.0 - 2.5 / 1000) ** 50, abs=1e-12)

    def test_edge_cases(self):
        assert p_sampled_approx(100, 0, 5) == 0.0
        assert p_sampled_approx(100, 5, 0) == 0.0
        assert p_sampled_approx(100, 5, 100) == 1.0


class TestSamplingPlans:
    def test_window_width(self):
        assert window_width(spike_dist(1055, 50.0, 1.16), N_SIGMA) == 6
        assert window_width(spike_dist(10, 50.0, SIGMA_FLOOR), 0.4) == 1

    def test_reference_setting_frozen_values(self):
        dist = spike_dist(1055, 50.0, 1.16)
        assert p_old(dist, Z) == pytest.approx(0.047675, abs=1e-6)
        assert p_new(dist, Z, N_SIGMA, "whole-cluster") == pytest.approx(0.557672, abs=1e-6)
        assert p_new(dist, Z, N_SIGMA, "window") == pytest.approx(0.554044, abs=1e-6)
        assert delta_p(dist, Z, Z, N_SIGMA, "whole-cluster") == pytest.approx(0.509998, abs=1e-6)
        assert delta_p(dist, Z, Z, N_SIGMA, "window") == pytest.approx(0.506369, abs=1e-6)

    def test_marked_count_capped_by_window_pool(self):
        # 400 rejects crammed into a 1-period window of 100 products
        dist = spike_dist(400, 5.0, SIGMA_FLOOR, j1=10, y_s=100)
        assert p_new(dist, 10, 0.4) == 1.0

    def test_targeting_always_gains_on_contained_clusters(self):
        for m1 in (10, 100, 1000):
            for sigma in (SIGMA_FLOOR, 2.0, 5.0):
                for n in (1.0, 2.0, N_SIGMA):
                    for z in (50, 200):
                        dist = spike_dist(m1, 50.0, sigma, y_s=1000)
                        for mode in ("window", "whole-cluster"):
                            assert delta_p(dist, z, z, n, mode) > 0.0

    def test_mode_whitelist(self):
        dist = spike_dist(100, 50.0, 1.16)
        with pytest.raises(SamplingError, match="m2_mode must be one of"):
            p_new(dist, Z, N_SIGMA, "everything")
        with pytest.raises(SamplingError, match="m2_mode must be one of"):
            build_report(dist, Z, Z, N_SIGMA, "everything")

    def test_report_consistency(self):
        dist = spike_dist(1055, 50.0, 1.16)
        report = build_report(dist, Z, Z, N_SIGMA, "whole-cluster")
        assert report.j2 == 6
        assert report.m2 == 1055.0
        assert report.p_new - report.p_old == pytest.approx(report.delta_p, abs=1e-15)
        assert report.coverage == pytest.approx(coverage(N_SIGMA), abs=1e-15)


class TestMonteCarlo:
    def test_small_pool_within_three_se(self):
        p_hat, se = monte_carlo_p(10, 2, 1, trials=20000, seed=0)
        assert se > 0.0
        assert abs(p_hat - 0.2) < 3.0 * se

    def test_shift_scale_within_three_se(self):
        y = J1 * Y_S
        p_hat, se = monte_carlo_p(y, Z, 1055, trials=100_000, seed=1)
        assert abs(p_hat - p_sampled_exact(y, Z, 1055)) < 3.0 * se

    def test_seeded_determinism(self):
        a = monte_carlo_p(1000, 50, 10, trials=5000, seed=7)
        b = monte_carlo_p(1000, 50, 10, trials=5000, seed=7)
        assert a == b

    def test_degenerate_inputs(self):
        assert monte_carlo_p(100, 10, 0, trials=100) == (0.0, 0.0)
        assert monte_carlo_p(100, 0, 5, trials=100) == (0.0, 0.0)
        with pytest.raises(SamplingError, match="trials"):
            monte_carlo_p(100, 10, 5, trials=0)


class TestReportOutput:
    def test_csv_round_trips_floats(self, tmp_path):
        dist = spike_dist(1055, 50.0, 1.16)
        report = build_report(dist, Z, Z, N_SIGMA)
        path = tmp_path / "report.csv"
        write_report(report, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "key,value"
        values = dict(ln.split(",", 1) for ln in lines[1:])
        assert float(values["p_old"]) == report.p_old
        assert float(values["p_new"]) == report.p_new
        assert float(values["delta_p"]) == report.delta_p
        assert values["m2_mode"] == "window"

    def test_text_block_mentions_both_plans(self):
        dist = spike_dist(1055, 50.0, 1.16)
        text = format_report(build_report(dist, Z, Z, N_SIGMA))
        assert "P_old=" in text and "P_new=" in text and "delta_p=" in text

    def test_shift_period_ids(self):
        ids = shift_period_ids(10, 3)
        assert ids.min() == 1 and ids.max() == 3
        assert np.all(np.diff(ids) >= 0)
        sizes = np.bincount(ids)[1:]
        assert sizes.max() - sizes.min() <= 1
        with pytest.raises(SamplingError, match="fewer points than periods"):
            shift_period_ids(2, 3)
