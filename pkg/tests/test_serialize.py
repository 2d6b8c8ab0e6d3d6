"""Text model files: lossless round trips and malformed-file diagnostics."""

import numpy as np
import pytest

from drawcast.predictors import (
    GmdhNetwork,
    anfis_eval_batch,
    gmdh_predict,
    gmdh_train,
    load_model,
    mlffnn_predict,
    save_model,
)
from drawcast.predictors.anfis import FuzzyRuleBase
from drawcast.predictors.mlffnn import MlffnnModel
from drawcast.predictors.serialize import MAGIC, ModelFormatError


def small_fis(seed=0):
    rng = np.random.default_rng(seed)
    return FuzzyRuleBase(
        a=rng.uniform(0.5, 2.0, (3, 2)),
        b=rng.uniform(0.8, 2.5, (3, 2)),
        c=rng.normal(0.0, 1.5, (3, 2)),
        coeffs=rng.normal(size=(3, 3)),
    )


def small_mlffnn(seed=1):
    rng = np.random.default_rng(seed)
    return MlffnnModel(
        w1=rng.normal(size=(4, 3)),
        b1=rng.normal(size=4),
        w2=rng.normal(size=4),
        b2=float(rng.normal()),
        x_mean=rng.normal(size=3),
        x_sd=rng.uniform(0.5, 2.0, 3),
        y_mean=2.5,
        y_sd=1.25,
    )


def small_gmdh(seed=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (60, 3))
    y = 1.0 + 2.0 * X[:, 0] + 3.0 * X[:, 1] - X[:, 0] * X[:, 2]
    return gmdh_train(X, y, n_keep=6, max_layers=3), X


class TestRoundTrips:
    def test_anfis(self, tmp_path):
        fis = small_fis()
        X = np.random.default_rng(5).normal(size=(30, 2))
        path = tmp_path / "model.txt"
        save_model(fis, path)
        back = load_model(path)
        assert isinstance(back, FuzzyRuleBase)
        for field in ("a", "b", "c", "coeffs"):
            np.testing.assert_array_equal(getattr(back, field), getattr(fis, field))
        np.testing.assert_array_equal(anfis_eval_batch(back, X), anfis_eval_batch(fis, X))

    def test_mlffnn(self, tmp_path):
        model = small_mlffnn()
        X = np.random.default_rng(6).normal(size=(30, 3))
        path = tmp_path / "model.txt"
        save_model(model, path)
        back = load_model(path)
        assert isinstance(back, MlffnnModel)
        assert back.b2 == model.b2
        assert back.y_mean == model.y_mean and back.y_sd == model.y_sd
        np.testing.assert_array_equal(back.w1, model.w1)
        np.testing.assert_array_equal(back.x_sd, model.x_sd)
        np.testing.assert_array_equal(mlffnn_predict(back, X), mlffnn_predict(model, X))

    def test_gmdh(self, tmp_path):
        net, X = small_gmdh()
        path = tmp_path / "model.txt"
        save_model(net, path)
        back = load_model(path)
        assert isinstance(back, GmdhNetwork)
        assert back.n_inputs == net.n_inputs
        assert back.depth == net.depth
        assert back.n_keep == net.n_keep
        assert back.max_layers == net.max_layers
        assert back.pressure == net.pressure
        assert back.y_mean == net.y_mean and back.y_sd == net.y_sd
        np.testing.assert_array_equal(back.x_mean, net.x_mean)
        np.testing.assert_array_equal(back.x_sd, net.x_sd)
        assert back.criterion_history == net.criterion_history
        assert back.input_names == net.input_names
        np.testing.assert_array_equal(gmdh_predict(back, X), gmdh_predict(net, X))

    def test_gmdh_named_inputs(self, tmp_path):
        rng = np.random.default_rng(3)
        X = rng.uniform(-1.0, 1.0, (50, 2))
        y = X[:, 0] - 2.0 * X[:, 1]
        net = gmdh_train(X, y, n_keep=4, max_layers=2, input_names=["VE03", "SE07"])
        path = tmp_path / "model.txt"
        save_model(net, path)
        assert load_model(path).input_names == ["VE03", "SE07"]

    def test_save_is_byte_stable(self, tmp_path):
        fis = small_fis()
        p1, p2, p3 = (tmp_path / n for n in ("a.txt", "b.txt", "c.txt"))
        save_model(fis, p1)
        save_model(fis, p2)
        assert p1.read_bytes() == p2.read_bytes()
        # load -> save reproduces the file exactly (repr floats round-trip)
        save_model(load_model(p1), p3)
        assert p3.read_bytes() == p1.read_bytes()

    def test_unsupported_object(self, tmp_path):
        with pytest.raises(ModelFormatError, match="cannot serialise dict"):
            save_model({"a": 1}, tmp_path / "model.txt")


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestMalformedFiles:
    def test_missing_header(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(path, ["not a model file"])
        with pytest.raises(ModelFormatError, match="missing header"):
            load_model(path)

    def test_kind_line_required(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(path, [MAGIC, "rules: 2"])
        with pytest.raises(ModelFormatError, match="kind line must follow"):
            load_model(path)

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(path, [MAGIC, "kind: svm"])
        with pytest.raises(ModelFormatError, match="unknown model kind 'svm'"):
            load_model(path)

    def test_truncated_array(self, tmp_path):
        fis = small_fis()
        path = tmp_path / "model.txt"
        save_model(fis, path)
        lines = path.read_text().splitlines()
        write_lines(path, lines[:-2])  # drop the tail of the coeffs block
        with pytest.raises(ModelFormatError, match="array 'coeffs' truncated"):
            load_model(path)

    def test_missing_arrays(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(path, [MAGIC, "kind: anfis", "array a 1 2", "1.0 2.0"])
        with pytest.raises(ModelFormatError, match="missing arrays: b, c, coeffs"):
            load_model(path)

    def test_declared_shape_mismatch(self, tmp_path):
        fis = small_fis()
        path = tmp_path / "model.txt"
        save_model(fis, path)
        text = path.read_text().replace("rules: 3", "rules: 4")
        path.write_text(text)
        with pytest.raises(ModelFormatError, match="declared shape disagrees"):
            load_model(path)

    def test_declared_depth_mismatch(self, tmp_path):
        net, _ = small_gmdh()
        path = tmp_path / "model.txt"
        save_model(net, path)
        text = path.read_text().replace(f"depth: {net.depth}", f"depth: {net.depth + 1}")
        path.write_text(text)
        with pytest.raises(ModelFormatError, match="declared depth disagrees"):
            load_model(path)

    def test_non_numeric_array(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(path, [MAGIC, "kind: anfis", "array a 1 2", "1.0 spam"])
        with pytest.raises(ModelFormatError, match="array 'a' holds non-numeric"):
            load_model(path)

    def test_bad_array_header(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(path, [MAGIC, "kind: anfis", "array a one 2"])
        with pytest.raises(ModelFormatError, match="bad array header"):
            load_model(path)

    def test_unparseable_line(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(path, [MAGIC, "kind: anfis", "what is this"])
        with pytest.raises(ModelFormatError, match="unparseable line"):
            load_model(path)

    def test_mlffnn_missing_scalar_field(self, tmp_path):
        model = small_mlffnn()
        path = tmp_path / "model.txt"
        save_model(model, path)
        lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("b2: ")]
        write_lines(path, lines)
        with pytest.raises(ModelFormatError, match="missing field"):
            load_model(path)

    def test_gmdh_neuron_before_layer(self, tmp_path):
        path = tmp_path / "model.txt"
        write_lines(
            path,
            [MAGIC, "kind: gmdh", "neuron 0 1 0.5 1 2 3 4 5 6"],
        )
        with pytest.raises(ModelFormatError, match="neuron before any layer"):
            load_model(path)
