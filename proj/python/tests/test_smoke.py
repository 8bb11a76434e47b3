"""Smoke tests for the pybind11 module: a miniature end-to-end pipeline."""

import math

import numpy as np
import pytest

import edtl


@pytest.fixture(scope="module")
def domain_pair():
    return edtl.simulate_pair(n_source=500, n_target=150, seed=3, target="E", dt=1.0)


def test_simulate_shapes(domain_pair):
    source, target = domain_pair
    assert len(source) == 500
    assert len(target) == 150
    assert source.X.shape == (500, len(source.schema.names))
    assert len(source.schema.names) > len(target.schema.names)  # sensor mismatch
    assert source.schema.target_name == "E"


def test_dataset_roundtrip(tmp_path):
    X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    y = np.array([1.5, 2.5, 3.5])
    ds = edtl.Dataset(["a", "b"], "t", X, y)
    path = str(tmp_path / "small.csv")
    edtl.write_csv(path, ds)
    back = edtl.load_csv(path, "t")
    np.testing.assert_array_equal(back.X, X)
    np.testing.assert_array_equal(back.y, y)


def test_standardize_and_split(domain_pair):
    _, target = domain_pair
    std, scaler = edtl.fit_standardize(target)
    assert abs(float(np.mean(std.y))) < 1e-9
    train, test = edtl.split(target, 0.8, seed=1)
    assert len(train) == 120
    assert len(test) == 30
    sub = edtl.subsample_fraction(train, 0.5, seed=2)
    assert len(sub) == 60


def test_anomaly_injection(domain_pair):
    _, target = domain_pair
    spec = edtl.AnomalySpec()
    spec.seed = 5
    noisy = edtl.inject_anomalies(target, spec)
    changed = int(np.sum(np.any(noisy.X != target.X, axis=1)))
    assert changed == round(0.2 * len(target))
    np.testing.assert_array_equal(noisy.y, target.y)


def test_svr_fit_predict():
    rng = np.random.default_rng(0)
    Z = rng.uniform(-1, 1, size=(20, 2))
    y = np.sin(Z[:, 0]) + 0.1 * Z[:, 1]
    model = edtl.fit_svr(Z, y)
    assert model.converged
    pred = np.array([edtl.predict_svr(model, z) for z in Z])
    assert float(np.max(np.abs(pred - y))) < 0.5


def test_drying_constant():
    assert edtl.drying_constant(130.64) == pytest.approx(0.00719 * math.exp(-1))


def test_end_to_end_edtl(domain_pair, tmp_path):
    source, target = domain_pair
    cfg = edtl.TrainConfig()
    cfg.epochs = 3
    cfg.seed = 1
    pre = edtl.pretrain(source, cfg, [12, 12, 12, 12])
    assert pre.val_mse > 0.0

    train, test = edtl.split(target, 0.8, seed=7)
    model = edtl.train_edtl(pre, train, cfg)
    assert model.base_count == 5

    preds = edtl.predict_edtl(model, test.X)
    value, excluded = edtl.mape(test.y, np.asarray(preds))
    assert excluded == 0
    assert value < 100.0

    out = str(tmp_path / "edtl_model")
    edtl.save_edtl(out, model)
    back = edtl.load_edtl(out)
    again = edtl.predict_edtl(back, test.X)
    np.testing.assert_array_equal(np.asarray(preds), np.asarray(again))


def test_mape_hand_case():
    value, excluded = edtl.mape(np.array([100.0, 200.0]), np.array([110.0, 180.0]))
    assert value == pytest.approx(10.0)
    assert excluded == 0
