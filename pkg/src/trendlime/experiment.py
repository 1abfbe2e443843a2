# -*- coding: utf-8 -*-
"""
Driver del experimento: división cronológica, grilla
tickers x feature sets x arquitecturas, repeticiones con semillas
consecutivas y explicación del mejor modelo.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .config import ExperimentConfig, config_from_dict
from .errors import ShapeError, TrendLimeError
from .explain import (
    Attribution, ImportanceTable, aggregate, explain_instance, instance_series,
    training_baseline,
)
from .featurize import apply_scaler, attach_history, build_instances, score_tweets
from .ingest import load_bars, load_tweets, window
from .trainer import evaluate, grid_search, train

logger = logging.getLogger(__name__)

# Benchmark BOW models are never explained.
_EXPLAINABLE = ('proposed', 'sentiment_price', 'price_only')


def split_chronological(instances, fractions=(0.7, 0.1, 0.2)):
    """
    Contiguous train/val/test blocks in date order; train and val sizes
    are rounded down and the remainder goes to test.

    >>> [len(part) for part in split_chronological(list(range(10)))]
    [7, 1, 2]
    """
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ShapeError('split fractions must be three values summing to 1, got %r' % (fractions,))
    n = len(instances)
    n_train = int(math.floor(n * fractions[0] + 1e-9))
    n_val = int(math.floor(n * fractions[1] + 1e-9))
    parts = (instances[:n_train], instances[n_train:n_train + n_val], instances[n_train + n_val:])
    if any(len(p) == 0 for p in parts):
        raise ShapeError('split %r of %d instances leaves an empty part (%d/%d/%d)'
                         % (tuple(fractions), n, len(parts[0]), len(parts[1]), len(parts[2])))
    return parts


@dataclass
class CellResult:
    ticker: str
    feature_set: str
    arch: str
    train_acc: List[float] = field(default_factory=list)
    val_acc: List[float] = field(default_factory=list)
    test_acc: List[float] = field(default_factory=list)
    l2: Optional[float] = None
    grid_scores: Dict[float, float] = field(default_factory=dict)
    sizes: List[int] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def key(self):
        return (self.ticker, self.feature_set, self.arch)

    @property
    def failed(self):
        return self.error is not None

    def mean(self, split):
        values = getattr(self, '%s_acc' % split)
        return float(np.mean(values)) if values else float('nan')

    def to_dict(self):
        return {
            'ticker': self.ticker, 'feature_set': self.feature_set, 'arch': self.arch,
            'train_acc': self.train_acc, 'val_acc': self.val_acc, 'test_acc': self.test_acc,
            'mean_train_acc': self.mean('train'), 'mean_val_acc': self.mean('val'),
            'mean_test_acc': self.mean('test'),
            'l2': self.l2,
            'grid_scores': [[k, v] for k, v in sorted(self.grid_scores.items())],
            'sizes': self.sizes, 'error': self.error,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            ticker=data['ticker'], feature_set=data['feature_set'], arch=data['arch'],
            train_acc=list(data.get('train_acc', [])), val_acc=list(data.get('val_acc', [])),
            test_acc=list(data.get('test_acc', [])), l2=data.get('l2'),
            grid_scores={k: v for k, v in data.get('grid_scores', [])},
            sizes=list(data.get('sizes', [])), error=data.get('error'),
        )


@dataclass
class Explanation:
    ticker: str
    feature_set: str
    arch: str
    repeat: int
    feature_table: ImportanceTable
    time_table: ImportanceTable
    series: pd.DataFrame
    attributions: List[Attribution] = field(default_factory=list)

    def to_dict(self):
        return {
            'ticker': self.ticker, 'feature_set': self.feature_set, 'arch': self.arch,
            'repeat': self.repeat,
            'feature_importance': [list(kv) for kv in zip(self.feature_table.keys, self.feature_table.values)],
            'time_importance': [list(kv) for kv in zip(self.time_table.keys, self.time_table.values)],
            'series': {
                'columns': list(self.series.columns),
                'index': [str(d) for d in self.series.index],
                'values': self.series.values.tolist(),
            },
            'attributions': [a.to_dict() for a in self.attributions],
        }

    @classmethod
    def from_dict(cls, data):
        def table(axis, pairs):
            return ImportanceTable(axis, tuple(k for k, _ in pairs), tuple(float(v) for _, v in pairs))
        series = data['series']
        frame = pd.DataFrame(series['values'], columns=series['columns'],
                             index=pd.Index(series['index'], name='day'))
        return cls(
            ticker=data['ticker'], feature_set=data['feature_set'], arch=data['arch'],
            repeat=data['repeat'],
            feature_table=table('feature', data['feature_importance']),
            time_table=table('time', data['time_importance']),
            series=frame,
        )


@dataclass
class RunReport:
    cells: List[CellResult] = field(default_factory=list)
    explanations: List[Explanation] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def failed_cells(self):
        return [c for c in self.cells if c.failed]

    def cell(self, ticker, feature_set, arch):
        for c in self.cells:
            if c.key == (ticker, feature_set, arch):
                return c
        raise KeyError((ticker, feature_set, arch))

    def to_dict(self):
        return {
            'config': self.config,
            'cells': [c.to_dict() for c in self.cells],
            'explanations': [e.to_dict() for e in self.explanations],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            cells=[CellResult.from_dict(c) for c in data.get('cells', [])],
            explanations=[Explanation.from_dict(e) for e in data.get('explanations', [])],
            config=data.get('config', {}),
        )


def load_corpus(config, ticker, tweets=None):
    """
    Aligned corpus for one ticker plus the writer-score history (every
    loaded tweet). ``tweets`` lets several tickers share one load.
    """
    pipeline = config.pipeline
    if tweets is None:
        tweets = load_tweets(config.resolve_tweets_path(), None,
                             reject_rate_limit=pipeline.reject_rate_limit)
    bars = load_bars(config.resolve_bars_path(ticker), ticker)
    own = [t for t in tweets if t.ticker == ticker.upper()]
    start, end = pipeline.window
    corpus = window(own, bars, start, end, pipeline)
    return corpus, tweets


def prepare_instances(instances, arch):
    return attach_history(instances) if arch == 'cnn_lstm' else list(instances)


def explain_model(model, train_set, test_set, lime, ticker='', feature_set='proposed', repeat=0):
    """Attribute every test prediction of ``model`` and aggregate over the correct ones."""
    baseline = training_baseline([apply_scaler(inst, model.scaler) for inst in train_set])
    attributions = [
        explain_instance(model, apply_scaler(inst, model.scaler), baseline, lime)
        for inst in test_set
    ]
    correct = sum(1 for a in attributions if a.correct)
    logger.info('%s %s %s: explained %d test days, %d correct, mean fidelity %.3f',
                ticker, feature_set, model.arch, len(attributions), correct,
                float(np.mean([a.fidelity_r2 for a in attributions])) if attributions else float('nan'))
    return Explanation(
        ticker=ticker, feature_set=feature_set, arch=model.arch, repeat=repeat,
        feature_table=aggregate(attributions, 'feature'),
        time_table=aggregate(attributions, 'time'),
        series=instance_series(attributions),
        attributions=attributions,
    )


def _wants_explanation(config, feature_set, arch):
    if not config.explain:
        return False
    if config.explain_all:
        return feature_set in _EXPLAINABLE
    return feature_set == 'proposed' and arch == 'cnn'


def run_cell(config, ticker, feature_set, arch, instances):
    # type: (ExperimentConfig, str, str, str, list) -> tuple
    """Grid search on the first seed, then ``repeats`` trainings with seeds ``seed + i``."""
    cell = CellResult(ticker, feature_set, arch)
    train_set, val_set, test_set = split_chronological(prepare_instances(instances, arch), config.split)
    cell.sizes = [len(train_set), len(val_set), len(test_set)]
    base = config.model.replace(arch=arch, seed=config.seed)
    best, cell.grid_scores = grid_search(train_set, val_set, base)
    cell.l2 = best.l2

    best_model, best_repeat, best_test = None, None, -1.0
    for i in range(config.repeats):
        model = train(train_set, val_set, best.replace(seed=config.seed + i))
        accs = [100.0 * evaluate(model, part) for part in (train_set, val_set, test_set)]
        cell.train_acc.append(accs[0])
        cell.val_acc.append(accs[1])
        cell.test_acc.append(accs[2])
        logger.info('%s %s %s repeat %d: train %.2f val %.2f test %.2f',
                    ticker, feature_set, arch, i, accs[0], accs[1], accs[2])
        if accs[2] > best_test:
            best_model, best_repeat, best_test = model, i, accs[2]

    explanation = None
    if _wants_explanation(config, feature_set, arch):
        explanation = explain_model(best_model, train_set, test_set, config.lime.replace(seed=config.seed),
                                    ticker=ticker, feature_set=feature_set, repeat=best_repeat)
    return cell, explanation


def run_experiment(config):
    # type: (ExperimentConfig) -> RunReport
    """
    Every ticker x feature set x architecture cell. A fatal error inside a
    cell marks that cell failed and the run moves on.
    """
    if isinstance(config, dict):
        config = config_from_dict(config)
    report = RunReport(config=config.as_dict())
    tweets, tweet_error = None, None
    try:
        tweets = load_tweets(config.resolve_tweets_path(), None,
                             reject_rate_limit=config.pipeline.reject_rate_limit)
    except TrendLimeError as exc:
        logger.error('tweet corpus unusable: %s', exc)
        tweet_error = str(exc)

    for ticker in config.tickers:
        scored = corpus = history = None
        ticker_error = None if tweets is not None else tweet_error
        if ticker_error is None:
            try:
                corpus, history = load_corpus(config, ticker, tweets)
                scored = score_tweets(corpus, history, config.pipeline)
            except TrendLimeError as exc:
                ticker_error = str(exc)
                logger.error('%s: %s', ticker, exc)
        for feature_set in config.feature_sets:
            instances, set_error = None, ticker_error
            if set_error is None:
                try:
                    instances = build_instances(corpus, history, feature_set, config.pipeline, scored)
                except TrendLimeError as exc:
                    set_error = str(exc)
            for arch in config.archs:
                if set_error is not None:
                    report.cells.append(CellResult(ticker, feature_set, arch, error=set_error))
                    continue
                try:
                    cell, explanation = run_cell(config, ticker, feature_set, arch, instances)
                except TrendLimeError as exc:
                    logger.error('%s %s %s failed: %s', ticker, feature_set, arch, exc)
                    report.cells.append(CellResult(ticker, feature_set, arch, error=str(exc)))
                    continue
                report.cells.append(cell)
                if explanation is not None:
                    report.explanations.append(explanation)
    logger.info('experiment finished: %d cells, %d failed', len(report.cells), len(report.failed_cells))
    return report
