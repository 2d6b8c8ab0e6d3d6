"""Fit metrics and acceptance-band flagging."""

import numpy as np
import pytest

from drawcast.predictors import SpecLimits, evaluate_predictions, flag_substandard
from drawcast.predictors.metrics import MetricsError


class TestEvaluatePredictions:
    def test_hand_computed_pair(self):
        """One unit error on one of two points: MSE one half."""
        m = evaluate_predictions(np.array([1.0, 3.0]), np.array([2.0, 3.0]))
        assert m.mse == pytest.approx(0.5)
        assert m.rmse == pytest.approx(0.7071, abs=5e-5)

    def test_documented_square_root_pair(self):
        targets = np.array([0.0, 1.0])
        m = evaluate_predictions(targets + np.sqrt(1.4357), targets)
        assert m.mse == pytest.approx(1.4357, abs=1e-12)
        assert m.rmse == pytest.approx(1.1982, abs=5e-5)

    def test_rmse_is_the_root_of_mse(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            p = rng.normal(size=60)
            t = rng.normal(size=60)
            m = evaluate_predictions(p, t)
            assert abs(m.rmse - np.sqrt(m.mse)) < 1e-9

    def test_perfect_fit(self):
        x = np.arange(10.0)
        m = evaluate_predictions(x, x)
        assert m.mse == 0.0 and m.rmse == 0.0
        assert m.r == pytest.approx(1.0)

    def test_r_survives_affine_maps_mse_does_not(self):
        rng = np.random.default_rng(7)
        t = rng.normal(size=50)
        p = t + 0.1 * rng.normal(size=50)
        base = evaluate_predictions(p, t)
        scaled = evaluate_predictions(3.0 * p + 2.0, t)
        assert scaled.r == pytest.approx(base.r, abs=1e-12)
        assert scaled.mse != pytest.approx(base.mse)

    def test_constant_arrays_rejected(self):
        with pytest.raises(MetricsError, match="constant"):
            evaluate_predictions(np.ones(5), np.arange(5.0))

    def test_shape_and_finiteness_guards(self):
        with pytest.raises(MetricsError, match="equal-length"):
            evaluate_predictions(np.ones(4), np.ones(5))
        with pytest.raises(MetricsError, match="non-finite"):
            evaluate_predictions(np.array([1.0, np.inf]), np.array([1.0, 2.0]))


class TestFlagSubstandard:
    LIMITS = SpecLimits(1050.0, 4.8, 3.2)

    def test_nominal_value_passes(self):
        assert not flag_substandard(np.array([1050.0]), self.LIMITS)[0]

    def test_just_outside_the_band_is_flagged(self):
        edge = 1050.0 + (3.2 + 0.01) * 4.8
        flags = flag_substandard(np.array([edge, 2100.0 - edge]), self.LIMITS)
        assert flags.tolist() == [True, True]

    def test_band_edges_are_acceptable(self):
        inside = 1050.0 + 3.2 * 4.8
        flags = flag_substandard(np.array([inside, 1050.0 - 3.2 * 4.8]), self.LIMITS)
        assert flags.tolist() == [False, False]

    def test_wider_band_flags_a_subset(self):
        rng = np.random.default_rng(42)
        preds = 1050.0 + 20.0 * rng.normal(size=400)
        tight = flag_substandard(preds, SpecLimits(1050.0, 4.8, 2.0))
        loose = flag_substandard(preds, SpecLimits(1050.0, 4.8, 3.2))
        assert (loose <= tight).all()
        assert loose.sum() < tight.sum()

    def test_limit_validation(self):
        with pytest.raises(MetricsError, match="sigma1"):
            SpecLimits(1050.0, 0.0, 3.2)
        with pytest.raises(MetricsError, match="n must be positive"):
            SpecLimits(1050.0, 4.8, -1.0)

    def test_non_finite_predictions_rejected(self):
        with pytest.raises(MetricsError, match="non-finite"):
            flag_substandard(np.array([np.nan]), self.LIMITS)
