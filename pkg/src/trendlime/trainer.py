# -*- coding: utf-8 -*-
"""
Entrenamiento por mini-lotes con Adam y selección de la mejor época en
validación; búsqueda en grilla del término L2.
"""
import logging

import numpy as np

from .errors import NumericError, ShapeError
from .featurize import apply_scaler, fit_scaler
from .models import (
    TrainedModel, _model_input, init_weights, loss_and_grads, objective, predict_values,
)

logger = logging.getLogger(__name__)


class Adam(object):

    def __init__(self, weights, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in weights.items()}
        self.v = {k: np.zeros_like(v) for k, v in weights.items()}

    def step(self, weights, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name in sorted(weights):
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            weights[name] = weights[name] - self.lr * (self.m[name] / c1) / (np.sqrt(self.v[name] / c2) + self.eps)


def stack_inputs(model_like, instances):
    X = np.stack([_model_input(model_like, inst) for inst in instances])
    y = np.array([inst.y for inst in instances], dtype=float)
    return X, y


def accuracy(model, X, y):
    if len(y) == 0:
        return float('nan')
    labels = (predict_values(model, X) >= 0.5).astype(float)
    return float(np.mean(labels == y))


def train(train_set, val_set, config):
    # type: (list, list, object) -> TrainedModel
    """
    Fit a model on chronologically earlier ``train_set`` and keep the epoch
    with the best validation accuracy (the earliest one on ties). Without a
    validation set the last epoch is kept.

    The column scaler is fitted on ``train_set`` and both sets are scaled
    here; pass unscaled instances.
    """
    if not train_set:
        raise ShapeError('empty training set')
    scaler = fit_scaler(train_set)
    train_scaled = [apply_scaler(inst, scaler) for inst in train_set]
    val_scaled = [apply_scaler(inst, scaler) for inst in (val_set or [])]
    input_shape = train_set[0].values.shape

    rng = np.random.default_rng(config.seed)
    model = TrainedModel(
        config=config,
        weights=init_weights(config, input_shape, rng),
        input_shape=input_shape,
        scaler=scaler,
        column_names=tuple(train_set[0].x.column_names),
    )
    X, y = stack_inputs(model, train_scaled)
    if val_scaled:
        Xv, yv = stack_inputs(model, val_scaled)
    optimizer = Adam(model.weights, config.learning_rate, config.beta1, config.beta2, config.adam_eps)

    best_acc = -1.0
    best_weights = None
    n = len(y)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            try:
                loss, grads = loss_and_grads(model.weights, config, X[idx], y[idx])
            except NumericError as exc:
                raise NumericError('training diverged at epoch %d (seed %d): %s'
                                   % (epoch, config.seed, exc), layer=exc.layer, seed=config.seed)
            if not np.isfinite(loss):
                raise NumericError('training diverged at epoch %d (seed %d): loss is %r'
                                   % (epoch, config.seed, loss), seed=config.seed)
            optimizer.step(model.weights, grads)

        train_loss, z = objective(model.weights, config, X, y)
        record = {'epoch': epoch, 'loss': train_loss, 'train_acc': float(np.mean((z >= 0.0) == (y == 1.0)))}
        if val_scaled:
            record['val_acc'] = accuracy(model, Xv, yv)
        model.train_history.append(record)
        score = record.get('val_acc', 0.0)
        if not val_scaled or score > best_acc:
            best_acc = score
            best_weights = {k: v.copy() for k, v in model.weights.items()}
            model.best_epoch = epoch

    model.weights = best_weights
    logger.debug('seed %d l2 %g: best epoch %s of %d', config.seed, config.l2, model.best_epoch, config.epochs)
    return model


def evaluate(model, instances):
    """Accuracy in [0, 1] of ``model`` on unscaled instances."""
    if not instances:
        return float('nan')
    scaled = [apply_scaler(inst, model.scaler) for inst in instances]
    X, y = stack_inputs(model, scaled)
    return accuracy(model, X, y)


def grid_search(train_set, val_set, base, grid=None, repeats=None):
    """
    Pick the L2 weight with the best mean validation accuracy over
    ``repeats`` seeds (``base.seed + r``). Ties go to the larger L2.
    Returns ``(best_config, {l2: mean_val_acc})``.
    """
    grid = tuple(base.grid if grid is None else grid)
    repeats = base.grid_repeats if repeats is None else repeats
    scores = {}
    for l2 in grid:
        accs = []
        for r in range(repeats):
            model = train(train_set, val_set, base.replace(l2=l2, seed=base.seed + r))
            accs.append(evaluate(model, val_set))
        scores[l2] = float(np.mean(accs))
        logger.info('grid l2=%g: mean val accuracy %.4f over %d run(s)', l2, scores[l2], repeats)
    best = max(grid, key=lambda l2: (scores[l2], l2))
    logger.info('grid search picked l2=%g', best)
    return base.replace(l2=best), scores
