"""Layered polynomial networks: exact recovery, stopping, pruning."""

import numpy as np
import pytest

from drawcast.predictors import gmdh_predict, gmdh_train
from drawcast.predictors.gmdh import GmdhError


def quadratic_design(u, v):
    return np.column_stack([np.ones_like(u), u, v, u * u, v * v, u * v])


class TestExactRecovery:
    def test_noiseless_bilinear_target_in_one_layer(self):
        """y = 1 + 2u + 3v + 0.5uv is inside one neuron's model class."""
        rng = np.random.default_rng(42)
        u = rng.uniform(-2.0, 2.0, 200)
        v = rng.uniform(-2.0, 2.0, 200)
        y = 1.0 + 2.0 * u + 3.0 * v + 0.5 * u * v
        net = gmdh_train(np.column_stack([u, v]), y)
        assert len(net.layers) == 1
        # effective original-unit coefficients, recovered by regression
        pred = gmdh_predict(net, np.column_stack([u, v]))
        coef, *_ = np.linalg.lstsq(quadratic_design(u, v), pred, rcond=None)
        np.testing.assert_allclose(coef, [1.0, 2.0, 3.0, 0.0, 0.0, 0.5], atol=1e-6)
        np.testing.assert_allclose(pred, y, atol=1e-6)

    def test_holds_on_unseen_points(self):
        rng = np.random.default_rng(7)
        u = rng.uniform(-2.0, 2.0, 150)
        v = rng.uniform(-2.0, 2.0, 150)
        y = 1.0 + 2.0 * u + 3.0 * v + 0.5 * u * v
        net = gmdh_train(np.column_stack([u, v]), y)
        u2 = rng.uniform(-1.5, 1.5, 60)
        v2 = rng.uniform(-1.5, 1.5, 60)
        pred = gmdh_predict(net, np.column_stack([u2, v2]))
        np.testing.assert_allclose(pred, 1.0 + 2.0 * u2 + 3.0 * v2 + 0.5 * u2 * v2, atol=1e-6)


class TestStoppingAndPruning:
    def make_rich_problem(self, seed=0, n=300, d=6):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, d))
        y = (
            X[:, 0]
            + 0.8 * X[:, 1]
            - 0.6 * X[:, 2]
            + 0.5 * X[:, 0] * X[:, 3]
            + 0.3 * X[:, 4] ** 2
            + 0.05 * rng.normal(size=n)
        )
        return X, y

    def test_best_criterion_never_rises_across_layers(self):
        X, y = self.make_rich_problem()
        net = gmdh_train(X, y, n_keep=20, max_layers=5)
        hist = net.criterion_history
        assert len(hist) == len(net.layers)
        assert all(b < a for a, b in zip(hist, hist[1:]))

    def test_final_layer_is_a_single_neuron(self):
        X, y = self.make_rich_problem(seed=1)
        net = gmdh_train(X, y, n_keep=15, max_layers=4)
        assert len(net.layers[-1]) == 1

    def test_zero_pressure_admits_no_more_than_full_pressure(self):
        X, y = self.make_rich_problem(seed=2)
        tight = gmdh_train(X, y, n_keep=30, max_layers=3, pressure=0.0)
        loose = gmdh_train(X, y, n_keep=30, max_layers=3, pressure=1.0)
        depth = min(len(tight.layers), len(loose.layers))
        for k in range(depth - 1):  # pruning may thin the last layers
            assert len(tight.layers[k]) <= len(loose.layers[k])

    def test_pruning_keeps_only_ancestors(self):
        """Every retained neuron feeds the next layer; no dead branches."""
        X, y = self.make_rich_problem(seed=3)
        net = gmdh_train(X, y, n_keep=12, max_layers=4)
        for k in range(len(net.layers) - 1):
            used = set()
            for nrn in net.layers[k + 1]:
                used.add(nrn.in1)
                used.add(nrn.in2)
            assert used == set(range(len(net.layers[k])))


class TestEdgeCases:
    def test_constant_target_predicts_the_constant_at_depth_1(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(50, 3))
        y = np.full(50, 4.25)
        net = gmdh_train(X, y)
        assert len(net.layers) == 1
        np.testing.assert_allclose(gmdh_predict(net, X), y, atol=1e-9)

    def test_single_feature_rejected(self):
        with pytest.raises(GmdhError, match="at least two input columns"):
            gmdh_train(np.zeros((10, 1)), np.zeros(10))

    def test_too_few_rows_rejected(self):
        with pytest.raises(GmdhError, match="at least 4 rows"):
            gmdh_train(np.zeros((3, 2)), np.zeros(3))

    def test_parameter_validation(self):
        X, y = np.zeros((10, 2)), np.arange(10.0)
        with pytest.raises(GmdhError, match="n_keep"):
            gmdh_train(X, y, n_keep=0)
        with pytest.raises(GmdhError, match="pressure"):
            gmdh_train(X, y, pressure=1.5)

    def test_prediction_width_checked(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(60, 3))
        net = gmdh_train(X, X[:, 0] + X[:, 1] * X[:, 2])
        with pytest.raises(GmdhError, match="3 columns"):
            gmdh_predict(net, np.zeros((4, 2)))


class TestDeterminism:
    def test_chronological_split_is_seed_free(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(120, 4))
        y = X[:, 0] * X[:, 1] + X[:, 2]
        a = gmdh_train(X, y, n_keep=10, max_layers=3)
        b = gmdh_train(X, y, n_keep=10, max_layers=3, seed=123)
        np.testing.assert_array_equal(gmdh_predict(a, X), gmdh_predict(b, X))

    def test_shuffled_split_follows_the_seed(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(120, 4))
        y = X[:, 0] * X[:, 1] + X[:, 2] + 0.1 * rng.normal(size=120)
        a = gmdh_train(X, y, n_keep=10, max_layers=3, seed=42, shuffle_split=True)
        b = gmdh_train(X, y, n_keep=10, max_layers=3, seed=42, shuffle_split=True)
        np.testing.assert_array_equal(gmdh_predict(a, X), gmdh_predict(b, X))
        assert a.criterion_history == b.criterion_history
