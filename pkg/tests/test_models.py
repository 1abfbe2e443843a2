from __future__ import annotations

import datetime

import numpy as np
import pytest

from trendlime.config import ModelConfig
from trendlime.errors import ScalerMismatchError, ShapeError
from trendlime.featurize import FeatureMatrix, LabeledInstance, apply_scaler, attach_history, fit_scaler
from trendlime.models import (
    TrainedModel, backward, forward_cnn, forward_cnn_lstm, init_weights, load_model, loss_and_grads,
    predict, predict_batch, save_model, to_prediction,
)


def _model(arch: str = "cnn", seed: int = 0, zero: bool = False, **overrides) -> TrainedModel:
    config = ModelConfig(arch=arch, seed=seed, **overrides)
    weights = init_weights(config, (12, 16))
    if zero:
        weights = {k: np.zeros_like(v) for k, v in weights.items()}
    return TrainedModel(config=config, weights=weights, input_shape=(12, 16))


def _instances(n: int, seed: int = 0) -> list[LabeledInstance]:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        day = datetime.date(2019, 1, 1) + datetime.timedelta(days=k)
        matrix = FeatureMatrix(rng.normal(size=(12, 16)), day=day)
        out.append(LabeledInstance(day=day, x=matrix, y=k % 2))
    return out


def test_zero_weights_give_one_half():
    x = np.random.default_rng(0).normal(size=(12, 16))
    assert forward_cnn(_model(zero=True), x) == 0.5
    assert forward_cnn_lstm(_model("cnn_lstm", zero=True), [x, x, x]) == 0.5


def test_probabilities_are_deterministic_and_bounded():
    x = np.random.default_rng(1).normal(size=(12, 16))
    first = forward_cnn(_model(seed=3), x)
    assert first == forward_cnn(_model(seed=3), x)
    assert 0.0 < first < 1.0
    assert forward_cnn(_model(seed=3), x * 1e6) < 1.0


def test_lstm_is_order_sensitive():
    rng = np.random.default_rng(2)
    a, b, c = (rng.normal(size=(12, 16)) for _ in range(3))
    model = _model("cnn_lstm", seed=4)
    assert forward_cnn_lstm(model, [a, b, c]) != forward_cnn_lstm(model, [c, b, a])
    with pytest.raises(ShapeError):
        forward_cnn_lstm(model, [a, b])


def test_l2_gradient_identity():
    model = _model(seed=1)
    X = np.stack([inst.values for inst in _instances(4)])
    y = np.array([0.0, 1.0, 0.0, 1.0])
    _, plain = loss_and_grads(model.weights, model.config, X, y, l2=0.0)
    _, reg = loss_and_grads(model.weights, model.config, X, y, l2=0.3)
    for name, value in model.weights.items():
        expected = plain[name] + (2 * 0.3 * value if not name.endswith(".b") else 0.0)
        assert np.allclose(reg[name], expected)


@pytest.mark.parametrize("arch", ["cnn", "cnn_lstm"])
def test_zero_weights_with_balanced_labels_are_stationary(arch):
    model = _model(arch, zero=True)
    instances = _instances(6)
    if arch == "cnn_lstm":
        instances = attach_history(instances)
    grads = backward(model, instances)
    assert sum(inst.y for inst in instances) * 2 == len(instances)
    for name, grad in grads.items():
        assert np.allclose(grad, 0.0), name


def test_prediction_threshold():
    assert to_prediction(0.5).label == 1
    assert to_prediction(0.4999).label == 0
    assert to_prediction(0.93).probability == pytest.approx(0.93)


def test_batch_matches_single_predictions():
    instances = _instances(5)
    scaler = fit_scaler(instances)
    model = _model(seed=2)
    model.scaler = scaler
    scaled = [apply_scaler(inst, scaler) for inst in instances]
    batch = predict_batch(model, scaled)
    single = [predict(model, inst) for inst in scaled]
    assert [p.label for p in batch] == [p.label for p in single]
    assert np.allclose([p.probability for p in batch], [p.probability for p in single])
    assert predict_batch(model, []) == []


def test_unscaled_instance_is_rejected():
    instances = _instances(3)
    model = _model()
    model.scaler = fit_scaler(instances)
    with pytest.raises(ScalerMismatchError):
        predict(model, instances[0])
    other = fit_scaler(_instances(3, seed=9))
    with pytest.raises(ScalerMismatchError):
        predict(model, apply_scaler(instances[0], other))


def test_checkpoint_round_trip(tmp_path):
    instances = attach_history(_instances(6))
    scaler = fit_scaler(instances)
    model = _model("cnn_lstm", seed=7, grid=(0.0, 0.01))
    model.scaler = scaler
    model.column_names = instances[0].x.column_names
    model.best_epoch = 3
    loaded = load_model(save_model(model, tmp_path / "m" / "model.json"))
    assert loaded.config == model.config
    assert loaded.best_epoch == 3
    assert loaded.scaler.fingerprint == scaler.fingerprint
    assert set(loaded.weights) == set(model.weights)
    scaled = [apply_scaler(inst, scaler) for inst in instances]
    assert [p.probability for p in predict_batch(loaded, scaled)] == \
        [p.probability for p in predict_batch(model, scaled)]


def test_single_block_model():
    model = _model(conv_blocks=1)
    assert model.blocks == 1
    assert 0.0 < forward_cnn(model, np.ones((12, 16))) < 1.0
