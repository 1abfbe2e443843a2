# -*- coding: utf-8 -*-
"""
Arquitecturas CNN y CNN-LSTM sobre las matrices de features.

Pesos en un dict plano de arrays con nombres ``capa.parametro``:
``conv1.w``, ``conv1.b``, ``conv2.*``, ``dense1.*``, ``out.*`` y, para la
variante recurrente, ``lstm.wx``, ``lstm.wh``, ``lstm.b``.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from . import layers
from .config import ModelConfig
from .errors import ConfigError, ScalerMismatchError, ShapeError
from .featurize import ColumnScaler

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
# Probabilities are kept strictly inside (0, 1).
PROB_EPS = 1e-12
_PENALIZED = ('.w', '.wx', '.wh')


@dataclass
class TrainedModel:
    config: ModelConfig
    weights: Dict[str, np.ndarray]
    input_shape: Tuple[int, int]
    scaler: Optional[ColumnScaler] = None
    column_names: Tuple[str, ...] = ()
    train_history: List[dict] = field(default_factory=list)
    best_epoch: Optional[int] = None

    @property
    def arch(self):
        return self.config.arch

    @property
    def blocks(self):
        return _blocks_in(self.weights)


@dataclass(frozen=True)
class Prediction:
    probability: float
    label: int


def is_penalized(name):
    return name.endswith(_PENALIZED)


def _pooled_shape(shape, blocks, pool):
    h, w = shape
    for _ in range(blocks):
        h, w = h // pool[0], w // pool[1]
    return h, w


def init_weights(config, input_shape, rng=None):
    """He-initialized weights for ``config.arch`` on (H, W) inputs."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    blocks = config.blocks_for(input_shape)
    kh, kw = config.kernel
    weights = {}
    cin = 1
    for k in range(blocks):
        cout = config.channels[k]
        std = np.sqrt(2.0 / (kh * kw * cin))
        weights['conv%d.w' % (k + 1)] = rng.normal(0.0, std, size=(kh, kw, cin, cout))
        weights['conv%d.b' % (k + 1)] = np.zeros(cout)
        cin = cout
    ph, pw = _pooled_shape(input_shape, blocks, config.pool)
    if ph < 1 or pw < 1:
        raise ShapeError('input %s is too small for %d pooling blocks' % (input_shape, blocks))
    flat = ph * pw * cin
    weights['dense1.w'] = rng.normal(0.0, np.sqrt(2.0 / flat), size=(flat, config.dense_hidden))
    weights['dense1.b'] = np.zeros(config.dense_hidden)
    top = config.dense_hidden
    if config.arch == 'cnn_lstm':
        hidden = config.lstm_hidden
        weights['lstm.wx'] = rng.normal(0.0, np.sqrt(1.0 / top), size=(top, 4 * hidden))
        weights['lstm.wh'] = rng.normal(0.0, np.sqrt(1.0 / hidden), size=(hidden, 4 * hidden))
        weights['lstm.b'] = np.zeros(4 * hidden)
        top = hidden
    weights['out.w'] = rng.normal(0.0, np.sqrt(1.0 / top), size=(top, 1))
    weights['out.b'] = np.zeros(1)
    return weights


def _encode(weights, x, blocks, pool):
    """Conv blocks -> flatten -> dense -> ReLU. x: (N, H, W)."""
    caches = []
    act = x[..., None]
    for k in range(1, blocks + 1):
        act, conv_cache = layers.conv2d_forward(act, weights['conv%d.w' % k], weights['conv%d.b' % k],
                                                layer='conv%d' % k)
        act, relu_cache = layers.relu_forward(act)
        act, pool_cache = layers.maxpool_forward(act, pool)
        caches.append((conv_cache, relu_cache, pool_cache))
    flat_shape = act.shape
    act = act.reshape(act.shape[0], -1)
    act, dense_cache = layers.dense_forward(act, weights['dense1.w'], weights['dense1.b'], layer='dense1')
    act, dense_relu = layers.relu_forward(act)
    return act, (caches, flat_shape, dense_cache, dense_relu)


def _encode_backward(demb, cache, grads):
    caches, flat_shape, dense_cache, dense_relu = cache
    d = layers.relu_backward(demb, dense_relu)
    d, grads['dense1.w'], grads['dense1.b'] = layers.dense_backward(d, dense_cache)
    d = d.reshape(flat_shape)
    for k in range(len(caches), 0, -1):
        conv_cache, relu_cache, pool_cache = caches[k - 1]
        d = layers.maxpool_backward(d, pool_cache)
        d = layers.relu_backward(d, relu_cache)
        d, grads['conv%d.w' % k], grads['conv%d.b' % k] = layers.conv2d_backward(d, conv_cache)
    return d


def _blocks_in(weights):
    return sum(1 for name in weights if name.startswith('conv') and name.endswith('.w'))


def logits(weights, config, X):
    """
    Forward pass for a batch. ``X`` is (N, H, W) for the CNN and
    (N, T, H, W), oldest step first, for the CNN-LSTM.
    Returns ``(z, cache)`` with z of shape (N,).
    """
    blocks = _blocks_in(weights)
    X = np.asarray(X, dtype=float)
    if config.arch == 'cnn':
        if X.ndim != 3:
            raise ShapeError('cnn expects (N, H, W), got %s' % (X.shape,))
        emb, enc_cache = _encode(weights, X, blocks, config.pool)
        z, out_cache = layers.dense_forward(emb, weights['out.w'], weights['out.b'], layer='out')
        return z[:, 0], (enc_cache, None, out_cache, X.shape)
    if X.ndim != 4 or X.shape[1] != config.timesteps:
        raise ShapeError('cnn_lstm expects (N, %d, H, W), got %s' % (config.timesteps, X.shape))
    n, steps = X.shape[:2]
    emb, enc_cache = _encode(weights, X.reshape((n * steps,) + X.shape[2:]), blocks, config.pool)
    h, lstm_cache = layers.lstm_forward(emb.reshape(n, steps, -1),
                                        weights['lstm.wx'], weights['lstm.wh'], weights['lstm.b'])
    z, out_cache = layers.dense_forward(h, weights['out.w'], weights['out.b'], layer='out')
    return z[:, 0], (enc_cache, lstm_cache, out_cache, X.shape)


def probabilities(z):
    return np.clip(expit(z), PROB_EPS, 1.0 - PROB_EPS)


def _penalty(weights):
    return sum(float(np.sum(value ** 2)) for name, value in weights.items() if is_penalized(name))


def objective(weights, config, X, y, l2=None):
    """Forward-only loss; returns ``(loss, logits)``."""
    l2 = config.l2 if l2 is None else l2
    z, _ = logits(weights, config, X)
    y = np.asarray(y, dtype=float)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return (loss + l2 * _penalty(weights) if l2 else loss), z


def loss_and_grads(weights, config, X, y, l2=None):
    """Mean binary cross-entropy from logits plus ``l2 * sum(W**2)`` over weight tensors."""
    l2 = config.l2 if l2 is None else l2
    y = np.asarray(y, dtype=float)
    z, cache = logits(weights, config, X)
    n = z.shape[0]
    data_loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = ((expit(z) - y) / n)[:, None]

    enc_cache, lstm_cache, out_cache, x_shape = cache
    grads = {}
    d, grads['out.w'], grads['out.b'] = layers.dense_backward(dz, out_cache)
    if lstm_cache is not None:
        dembs, grads['lstm.wx'], grads['lstm.wh'], grads['lstm.b'] = layers.lstm_backward(d, lstm_cache)
        d = dembs.reshape(x_shape[0] * x_shape[1], -1)
    _encode_backward(d, enc_cache, grads)

    if not l2:
        return data_loss, grads
    for name, value in weights.items():
        if is_penalized(name):
            grads[name] = grads[name] + 2.0 * l2 * value
    return data_loss + l2 * _penalty(weights), grads


def _model_input(model, instance):
    if model.arch == 'cnn_lstm':
        seq = instance.sequence()
        if len(seq) != model.config.timesteps:
            raise ShapeError('%s: cnn_lstm needs %d matrices, instance has %d'
                             % (instance.day, model.config.timesteps, len(seq)))
        return np.stack(seq)
    return instance.values


def forward_cnn(model, x):
    """Probability for one scaled (H, W) matrix."""
    z, _ = logits(model.weights, model.config, np.asarray(x, dtype=float)[None])
    return float(probabilities(z)[0])


def forward_cnn_lstm(model, xs):
    """Probability for three scaled matrices ordered t-1, t-2, t-3."""
    if len(xs) != model.config.timesteps:
        raise ShapeError('expected %d matrices, got %d' % (model.config.timesteps, len(xs)))
    seq = np.stack([np.asarray(x, dtype=float) for x in reversed(xs)])
    z, _ = logits(model.weights, model.config, seq[None])
    return float(probabilities(z)[0])


def backward(model, batch, l2=None):
    """Gradient map for a list of scaled instances."""
    X = np.stack([_model_input(model, inst) for inst in batch])
    y = np.array([inst.y for inst in batch], dtype=float)
    _, grads = loss_and_grads(model.weights, model.config, X, y, l2)
    return grads


def predict_values(model, X):
    """Probabilities for a batch of already-scaled inputs."""
    z, _ = logits(model.weights, model.config, X)
    return probabilities(z)


def _check_scaled(model, instance):
    expected = model.scaler.fingerprint if model.scaler is not None else None
    if instance.scaler_fingerprint != expected:
        raise ScalerMismatchError('%s: instance scaled with %r, model expects %r'
                                  % (instance.day, instance.scaler_fingerprint, expected))


def predict(model, instance):
    # type: (TrainedModel, object) -> Prediction
    _check_scaled(model, instance)
    return to_prediction(predict_values(model, _model_input(model, instance)[None])[0])


def to_prediction(p):
    return Prediction(probability=float(p), label=1 if p >= 0.5 else 0)


def predict_batch(model, instances):
    if not instances:
        return []
    for inst in instances:
        _check_scaled(model, inst)
    probs = predict_values(model, np.stack([_model_input(model, inst) for inst in instances]))
    return [to_prediction(p) for p in probs]


def save_model(model, path):
    payload = {
        'version': CHECKPOINT_VERSION,
        'config': model.config.as_dict(),
        'input_shape': list(model.input_shape),
        'column_names': list(model.column_names),
        'scaler': model.scaler.to_dict() if model.scaler is not None else None,
        'weights': {name: {'shape': list(value.shape), 'data': value.ravel().tolist()}
                    for name, value in sorted(model.weights.items())},
        'train_history': model.train_history,
        'best_epoch': model.best_epoch,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload), encoding='utf-8')
    logger.info('saved %s model to %s', model.arch, path)
    return path


def load_model(path):
    payload = json.loads(Path(path).read_text(encoding='utf-8'))
    version = payload.get('version')
    if version != CHECKPOINT_VERSION:
        raise ConfigError('%s: unsupported checkpoint version %r' % (path, version))
    raw = {k: tuple(v) if isinstance(v, list) else v for k, v in payload['config'].items()}
    weights = {name: np.asarray(spec['data'], dtype=float).reshape(spec['shape'])
               for name, spec in payload['weights'].items()}
    return TrainedModel(
        config=ModelConfig(**raw),
        weights=weights,
        input_shape=tuple(payload['input_shape']),
        scaler=ColumnScaler.from_dict(payload['scaler']) if payload.get('scaler') else None,
        column_names=tuple(payload.get('column_names', ())),
        train_history=payload.get('train_history', []),
        best_epoch=payload.get('best_epoch'),
    )
