# -*- coding: utf-8 -*-
"""
Atribución por surrogate local sobre las celdas de la matriz.

Cada celda es un componente interpretable: se muestrean máscaras binarias,
las celdas apagadas toman el valor de la línea base (media de
entrenamiento), y una regresión ridge ponderada de las probabilidades del
modelo sobre las máscaras da un peso por celda.
"""
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .config import COLUMN_NAMES, ROW_TIMES, LimeSettings
from .errors import ConfigError, NumericError, ShapeError
from .models import TrainedModel, predict_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PerturbationSample:
    mask: np.ndarray
    x_perturbed: np.ndarray
    similarity: float


@dataclass(frozen=True, eq=False)
class PerturbationSet:
    """Samples held as stacked arrays; iterate to get PerturbationSample items."""
    masks: np.ndarray        # (n, H, W) of 0/1
    perturbed: np.ndarray    # (n, H, W)
    similarity: np.ndarray   # (n,)

    def __len__(self):
        return self.masks.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, k):
        return PerturbationSample(self.masks[k], self.perturbed[k], float(self.similarity[k]))


@dataclass(frozen=True, eq=False)
class Attribution:
    day: object
    cell_weights: np.ndarray
    intercept: float
    fidelity_r2: float
    predicted: int
    correct: bool
    probability: float = float('nan')
    column_names: Tuple[str, ...] = COLUMN_NAMES
    row_times: Tuple[str, ...] = ROW_TIMES

    def to_dict(self):
        return {
            'day': str(self.day),
            'predicted': int(self.predicted),
            'correct': bool(self.correct),
            'probability': float(self.probability),
            'fidelity_r2': float(self.fidelity_r2),
            'intercept': float(self.intercept),
            'cell_weights': self.cell_weights.tolist(),
        }


@dataclass(frozen=True)
class ImportanceTable:
    axis: str
    keys: Tuple[str, ...]
    values: Tuple[float, ...]

    def __len__(self):
        return len(self.keys)

    def as_dict(self):
        return dict(zip(self.keys, self.values))

    def ranked(self):
        return sorted(zip(self.keys, self.values), key=lambda kv: -kv[1])


def similarity_kernel(masks, kernel_width):
    """exp(-d^2 / width^2), d = share of cells switched off."""
    flat = masks.reshape(masks.shape[0], -1)
    d = 1.0 - flat.mean(axis=1)
    return np.exp(-(d ** 2) / kernel_width ** 2)


def sample_perturbations(x, n, baseline, seed, kernel_width=LimeSettings.kernel_width,
                         keep_probability=LimeSettings.keep_probability):
    """
    ``n`` random masks over the cells of ``x``; the first one keeps every cell.
    Switched-off cells take the ``baseline`` value.
    """
    x = np.asarray(x, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    if baseline.shape != x.shape:
        raise ShapeError('baseline shape %s does not match %s' % (baseline.shape, x.shape))
    cells = x.size
    if n < cells:
        raise ConfigError('%d samples cannot determine %d cell weights' % (n, cells))
    rng = np.random.default_rng(seed)
    masks = (rng.random((n,) + x.shape) < keep_probability).astype(np.uint8)
    masks[0] = 1
    perturbed = np.where(masks == 1, x, baseline)
    return PerturbationSet(masks=masks, perturbed=perturbed, similarity=similarity_kernel(masks, kernel_width))


@dataclass(frozen=True, eq=False)
class SurrogateFit:
    cell_weights: np.ndarray
    intercept: float
    fidelity_r2: float


def fit_surrogate(samples, probabilities, l2_ridge=LimeSettings.l2_ridge):
    """
    Weighted ridge regression of ``probabilities`` on the mask indicators.
    Sample weights are the similarities normalized to sum 1; the intercept
    is not penalized.
    """
    masks = samples.masks
    shape = masks.shape[1:]
    Z = masks.reshape(masks.shape[0], -1).astype(float)
    y = np.asarray(probabilities, dtype=float)
    if y.shape[0] != Z.shape[0]:
        raise ShapeError('%d probabilities for %d samples' % (y.shape[0], Z.shape[0]))
    if np.unique(Z, axis=0).shape[0] < 2:
        raise NumericError('surrogate needs at least 2 distinct masks', layer='surrogate')
    w = samples.similarity / samples.similarity.sum()

    z_mean = w @ Z
    y_mean = float(w @ y)
    Zc = Z - z_mean
    yc = y - y_mean
    gram = Zc.T @ (w[:, None] * Zc) + l2_ridge * np.eye(Z.shape[1])
    rhs = Zc.T @ (w * yc)
    try:
        coef = cho_solve(cho_factor(gram), rhs)
    except LinAlgError as exc:
        raise NumericError('surrogate system is singular: %s' % exc, layer='surrogate')
    if not np.all(np.isfinite(coef)):
        raise NumericError('surrogate weights are not finite', layer='surrogate')
    intercept = y_mean - float(z_mean @ coef)

    fitted = intercept + Z @ coef
    ss_res = float(w @ (y - fitted) ** 2)
    ss_tot = float(w @ yc ** 2)
    # Constant responses leave only roundoff in ss_tot.
    r2 = 1.0 if ss_tot <= 1e-20 else 1.0 - ss_res / ss_tot
    return SurrogateFit(cell_weights=coef.reshape(shape), intercept=intercept,
                        fidelity_r2=float(min(1.0, max(0.0, r2))))


def instance_seed(seed, day):
    """Per-instance seed from the global seed and the instance date."""
    digest = hashlib.sha256(('%s:%s' % (seed, day)).encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big')


def _black_box(model, instance):
    """Batch probability function over perturbed copies of the instance's own matrix."""
    if isinstance(model, TrainedModel):
        if model.arch == 'cnn_lstm':
            fixed = np.stack([m.values for m in reversed(instance.history)])

            def predict(X):
                prefix = np.broadcast_to(fixed, (X.shape[0],) + fixed.shape)
                return predict_values(model, np.concatenate([prefix, X[:, None]], axis=1))
            return predict
        return lambda X: predict_values(model, X)
    if callable(model):
        return model
    raise TypeError('cannot explain %r' % (model,))


def _fan_out(predict, X, workers, chunk_size):
    if workers <= 1 or X.shape[0] <= chunk_size:
        return np.asarray(predict(X), dtype=float)
    chunks = [X[lo:lo + chunk_size] for lo in range(0, X.shape[0], chunk_size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order.
        parts = list(pool.map(predict, chunks))
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def explain_instance(model, instance, baseline, settings=None):
    # type: (TrainedModel | Callable, object, np.ndarray, LimeSettings) -> Attribution
    """
    Explain one scaled instance. ``model`` is a TrainedModel or any
    callable mapping a (n, H, W) batch to probabilities.
    """
    settings = settings or LimeSettings()
    seed = instance_seed(settings.seed, instance.day)
    samples = sample_perturbations(instance.values, settings.n_samples, baseline, seed,
                                   settings.kernel_width, settings.keep_probability)
    probs = _fan_out(_black_box(model, instance), samples.perturbed, settings.workers, settings.chunk_size)
    fit = fit_surrogate(samples, probs, settings.l2_ridge)
    # Sample 0 is the untouched instance.
    probability = float(probs[0])
    predicted = 1 if probability >= 0.5 else 0
    return Attribution(
        day=instance.day,
        cell_weights=fit.cell_weights,
        intercept=fit.intercept,
        fidelity_r2=fit.fidelity_r2,
        predicted=predicted,
        correct=predicted == int(instance.y),
        probability=probability,
        column_names=tuple(instance.x.column_names),
        row_times=tuple(instance.x.row_times),
    )


def training_baseline(scaled_train):
    """Per-cell mean of the scaled training matrices."""
    if not scaled_train:
        raise ShapeError('no training matrices for the baseline')
    return np.mean([inst.values for inst in scaled_train], axis=0)


def aggregate(attributions, axis='feature'):
    # type: (Sequence[Attribution], str) -> ImportanceTable
    """
    Mean absolute importance over correct predictions, per feature column
    or per time row.
    """
    if axis not in ('feature', 'time'):
        raise ConfigError('axis must be feature or time, got %r' % (axis,))
    correct = [a for a in attributions if a.correct]
    if not correct:
        logger.warning('no correct predictions among %d attributions; %s importance is empty',
                       len(attributions), axis)
        return ImportanceTable(axis=axis, keys=(), values=())
    mass = np.mean([np.abs(a.cell_weights) for a in correct], axis=0)
    if axis == 'feature':
        return ImportanceTable(axis, tuple(correct[0].column_names), tuple(float(v) for v in mass.sum(axis=0)))
    return ImportanceTable(axis, tuple(correct[0].row_times), tuple(float(v) for v in mass.sum(axis=1)))


def instance_series(attributions):
    """Per-day feature importance for correct predictions, date-indexed."""
    correct = [a for a in attributions if a.correct]
    columns = list(correct[0].column_names) if correct else list(COLUMN_NAMES)
    if not correct:
        return pd.DataFrame(columns=columns, index=pd.Index([], name='day'))
    rows = [np.abs(a.cell_weights).sum(axis=0) for a in correct]
    return pd.DataFrame(rows, columns=columns, index=pd.Index([str(a.day) for a in correct], name='day'))


def write_attributions(attributions, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='\n') as fh:
        for attribution in attributions:
            fh.write(json.dumps(attribution.to_dict()) + '\n')
    return path
