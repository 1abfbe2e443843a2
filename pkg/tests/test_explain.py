from __future__ import annotations

import datetime
import logging

import numpy as np
import pytest
from scipy.special import expit
from scipy.stats import spearmanr

from trendlime.config import COLUMN_NAMES, LimeSettings, ModelConfig
from trendlime.errors import ConfigError, NumericError
from trendlime.explain import (
    Attribution, PerturbationSet, aggregate, explain_instance, fit_surrogate, instance_seed, instance_series,
    sample_perturbations, training_baseline, write_attributions,
)
from trendlime.featurize import FeatureMatrix, LabeledInstance, apply_scaler, attach_history, fit_scaler
from trendlime.models import TrainedModel, init_weights

DAY = datetime.date(2019, 6, 6)
ONES = np.ones((12, 16))
ZEROS = np.zeros((12, 16))


def _instance(values=ONES, y=1, day=DAY) -> LabeledInstance:
    return LabeledInstance(day=day, x=FeatureMatrix(np.asarray(values, dtype=float), day=day), y=y)


def _attribution(weights, correct=True, day=DAY) -> Attribution:
    return Attribution(day=day, cell_weights=np.asarray(weights, dtype=float), intercept=0.0,
                       fidelity_r2=1.0, predicted=1, correct=correct)


def _linear_box(coef: np.ndarray, intercept: float = 0.1):
    def predict(X):
        return intercept + (X * coef).sum(axis=(1, 2))
    return predict


def test_first_sample_is_the_instance():
    x = np.random.default_rng(0).normal(size=(12, 16))
    samples = sample_perturbations(x, 300, ZEROS, seed=1)
    assert len(samples) == 300
    assert samples[0].mask.all()
    assert np.array_equal(samples[0].x_perturbed, x)
    assert samples[0].similarity == 1.0
    assert (samples.similarity <= 1.0).all() and (samples.similarity > 0).all()


def test_switched_off_cells_take_the_baseline():
    x = np.random.default_rng(0).normal(size=(12, 16))
    baseline = np.full((12, 16), 7.0)
    samples = sample_perturbations(x, 200, baseline, seed=1, keep_probability=0.0)
    assert np.array_equal(samples[1].x_perturbed, baseline)
    for sample in list(samples)[:20]:
        assert np.array_equal(sample.x_perturbed, np.where(sample.mask == 1, x, baseline))


def test_sampling_is_seeded():
    a = sample_perturbations(ONES, 250, ZEROS, seed=5)
    b = sample_perturbations(ONES, 250, ZEROS, seed=5)
    c = sample_perturbations(ONES, 250, ZEROS, seed=6)
    assert np.array_equal(a.masks, b.masks)
    assert not np.array_equal(a.masks, c.masks)
    assert instance_seed(0, DAY) == instance_seed(0, DAY)
    assert instance_seed(0, DAY) != instance_seed(1, DAY)


def test_too_few_samples():
    with pytest.raises(ConfigError):
        sample_perturbations(ONES, 191, ZEROS, seed=0)


def test_constant_black_box():
    samples = sample_perturbations(ONES, 400, ZEROS, seed=2)
    fit = fit_surrogate(samples, np.full(len(samples), 0.37))
    assert np.allclose(fit.cell_weights, 0.0)
    assert fit.intercept == pytest.approx(0.37)
    assert fit.fidelity_r2 == 1.0


def test_linear_black_box_is_recovered():
    coef = np.random.default_rng(3).normal(scale=0.01, size=(12, 16))
    samples = sample_perturbations(ONES, 2000, ZEROS, seed=4)
    fit = fit_surrogate(samples, _linear_box(coef)(samples.perturbed), l2_ridge=1e-9)
    assert np.abs(fit.cell_weights - coef).max() < 1e-6
    assert np.abs(fit.cell_weights).argmax() == np.abs(coef).argmax()
    assert fit.intercept == pytest.approx(0.1, abs=1e-6)
    assert fit.fidelity_r2 >= 0.999


def test_default_ridge_keeps_the_ranking():
    coef = np.random.default_rng(5).normal(scale=0.01, size=(12, 16))
    samples = sample_perturbations(ONES, 2000, ZEROS, seed=6)
    fit = fit_surrogate(samples, _linear_box(coef)(samples.perturbed))
    rho = spearmanr(fit.cell_weights.ravel(), coef.ravel()).correlation
    assert rho >= 0.95


def test_duplicated_samples_give_the_same_fit():
    coef = np.random.default_rng(7).normal(scale=0.01, size=(12, 16))
    samples = sample_perturbations(ONES, 500, ZEROS, seed=8)
    probs = _linear_box(coef)(samples.perturbed) + np.random.default_rng(9).normal(scale=1e-3, size=500)
    doubled = PerturbationSet(
        masks=np.concatenate([samples.masks, samples.masks]),
        perturbed=np.concatenate([samples.perturbed, samples.perturbed]),
        similarity=np.concatenate([samples.similarity, samples.similarity]),
    )
    once = fit_surrogate(samples, probs)
    twice = fit_surrogate(doubled, np.concatenate([probs, probs]))
    assert np.allclose(once.cell_weights, twice.cell_weights, atol=1e-9)
    assert once.intercept == pytest.approx(twice.intercept)


def test_identical_masks_are_rejected():
    masks = np.ones((300, 12, 16), dtype=np.uint8)
    samples = PerturbationSet(masks=masks, perturbed=masks.astype(float), similarity=np.ones(300))
    with pytest.raises(NumericError):
        fit_surrogate(samples, np.full(300, 0.5))


def test_dominant_cell_ranks_first():
    def box(X):
        return expit(4.0 * X[:, 3, 7] - 2.0 + 0.01 * X.sum(axis=(1, 2)))

    attribution = explain_instance(box, _instance(), ZEROS, LimeSettings(n_samples=1000, seed=1))
    flat = np.abs(attribution.cell_weights).ravel()
    assert np.unravel_index(flat.argmax(), (12, 16)) == (3, 7)
    assert attribution.predicted == 1 and attribution.correct
    assert 0.0 <= attribution.fidelity_r2 <= 1.0


def test_column_blind_model_gets_no_importance():
    def box(X):
        return 0.5 + 0.002 * (X[:, :, :15].sum(axis=(1, 2)) - 90.0)

    attributions = [
        explain_instance(box, _instance(day=DAY + datetime.timedelta(days=k)), ZEROS,
                         LimeSettings(n_samples=2000, seed=3))
        for k in range(3)
    ]
    table = aggregate(attributions, "feature").as_dict()
    top = max(table.values())
    assert table["lag3"] < 0.05 * top


def test_explanations_are_deterministic_and_order_stable():
    config = ModelConfig(channels=(2, 3), dense_hidden=4)
    model = TrainedModel(config=config, weights=init_weights(config, (12, 16)), input_shape=(12, 16))
    x = np.random.default_rng(2).normal(size=(12, 16))
    serial = explain_instance(model, _instance(x), ZEROS, LimeSettings(n_samples=400, seed=4))
    again = explain_instance(model, _instance(x), ZEROS, LimeSettings(n_samples=400, seed=4))
    threaded = explain_instance(model, _instance(x), ZEROS,
                                LimeSettings(n_samples=400, seed=4, workers=3, chunk_size=64))
    assert np.array_equal(serial.cell_weights, again.cell_weights)
    assert np.allclose(serial.cell_weights, threaded.cell_weights)
    assert serial.probability == pytest.approx(threaded.probability)


def test_recurrent_model_perturbs_the_latest_matrix_only():
    config = ModelConfig(arch="cnn_lstm", channels=(2, 3), dense_hidden=4, lstm_hidden=3)
    rng = np.random.default_rng(1)
    raw = [_instance(rng.normal(size=(12, 16)), day=DAY + datetime.timedelta(days=k)) for k in range(4)]
    scaler = fit_scaler(raw)
    instances = [apply_scaler(inst, scaler) for inst in attach_history(raw)]
    model = TrainedModel(config=config, weights=init_weights(config, (12, 16)), input_shape=(12, 16),
                         scaler=scaler)
    baseline = training_baseline(instances)
    attribution = explain_instance(model, instances[-1], baseline, LimeSettings(n_samples=300))
    assert attribution.cell_weights.shape == (12, 16)
    assert 0.0 < attribution.probability < 1.0


def test_aggregate_single_cell():
    weights = np.zeros((12, 16))
    weights[2, 7] = 0.3
    weights[5, 0] = -0.1
    features = aggregate([_attribution(weights)], "feature").as_dict()
    times = aggregate([_attribution(weights)], "time").as_dict()
    assert features["tweet_volume"] == pytest.approx(0.3)
    assert features["writer_score"] == pytest.approx(0.1)
    assert times["20-22"] == pytest.approx(0.3)
    assert times["2-4"] == pytest.approx(0.1)
    assert aggregate([_attribution(weights)], "feature").ranked()[0][0] == "tweet_volume"


def test_aggregate_conserves_mass_and_skips_wrong_predictions():
    rng = np.random.default_rng(0)
    good = [_attribution(rng.normal(size=(12, 16))) for _ in range(4)]
    bad = [_attribution(rng.normal(size=(12, 16)) * 100, correct=False)]
    features = aggregate(good + bad, "feature")
    times = aggregate(good + bad, "time")
    assert len(features) == 16 and len(times) == 12
    expected = np.mean([np.abs(a.cell_weights) for a in good], axis=0).sum()
    assert sum(features.values) == pytest.approx(expected)
    assert sum(times.values) == pytest.approx(expected)
    with pytest.raises(ConfigError):
        aggregate(good, "day")


def test_all_wrong_gives_empty_table(caplog):
    with caplog.at_level(logging.WARNING, logger="trendlime.explain"):
        table = aggregate([_attribution(ONES, correct=False)], "time")
    assert len(table) == 0
    assert "no correct predictions" in caplog.text


def test_instance_series(tmp_path):
    attributions = [
        _attribution(ONES, day=DAY),
        _attribution(ONES, correct=False, day=DAY + datetime.timedelta(days=1)),
        _attribution(2 * ONES, day=DAY + datetime.timedelta(days=2)),
    ]
    series = instance_series(attributions)
    assert list(series.columns) == list(COLUMN_NAMES)
    assert list(series.index) == ["2019-06-06", "2019-06-08"]
    assert series.loc["2019-06-08", "vader"] == 24.0
    assert instance_series([]).empty
    path = write_attributions(attributions, tmp_path / "a.jsonl")
    assert len(path.read_text(encoding="utf-8").splitlines()) == 3
