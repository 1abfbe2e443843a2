# -*- coding: utf-8 -*-
"""
    trendlime
    ~~~~~~~~~

    Daily feature matrices from tweets and prices, small convolutional
    next-close classifiers trained from scratch, and local surrogate
    attributions aggregated by feature, by time of day and by instance.

    >>> from trendlime import normalize, polarity, label, split_chronological

    >>> normalize(u'Apple is GREAT!!!', {u'is'})
    ['appl', 'great']

    >>> polarity(0.05), polarity(-0.5)
    (1, -1)

    >>> from trendlime.ingest import PriceBar
    >>> label(PriceBar(None, 100.0, 106.0, 99.0, 105.0, 10, 'AAPL'))
    1

    >>> [len(part) for part in split_chronological(list(range(100)))]
    [70, 10, 20]
"""
from .config import (
    COLUMN_NAMES, ROW_TIMES, FEATURE_SETS, ARCHS,
    PipelineConfig, ModelConfig, LimeSettings, ExperimentConfig, load_config,
)
from .errors import TrendLimeError
from .ingest import Tweet, PriceBar, AlignedCorpus, load_tweets, load_bars, window, filter_engagement
from .textprep import normalize, tokenize, load_stopwords
from .sentiment import SentimentScores, afinn_score, vader_score, polarity, score_text, load_afinn
from .featurize import (
    FeatureMatrix, LabeledInstance, WriterScoreLedger,
    total_engagement, writer_score, bucket, twitter_matrix, price_matrix, label, assemble,
    fit_scaler, apply_scaler, bow_matrix, build_instances, attach_history,
    write_matrices, read_matrices,
)
from .models import TrainedModel, forward_cnn, forward_cnn_lstm, backward, predict, predict_batch
from .trainer import train, grid_search
from .explain import (
    Attribution, ImportanceTable, sample_perturbations, fit_surrogate, explain_instance,
    aggregate, instance_series,
)
from .experiment import RunReport, split_chronological, run_experiment
from .reports import emit_reports
from .fixture import generate_fixture

__version__ = '0.1.0'

__all__ = [
    'COLUMN_NAMES', 'ROW_TIMES', 'FEATURE_SETS', 'ARCHS',
    'PipelineConfig', 'ModelConfig', 'LimeSettings', 'ExperimentConfig', 'load_config',
    'TrendLimeError',
    'Tweet', 'PriceBar', 'AlignedCorpus', 'load_tweets', 'load_bars', 'window', 'filter_engagement',
    'normalize', 'tokenize', 'load_stopwords',
    'SentimentScores', 'afinn_score', 'vader_score', 'polarity', 'score_text', 'load_afinn',
    'FeatureMatrix', 'LabeledInstance', 'WriterScoreLedger',
    'total_engagement', 'writer_score', 'bucket', 'twitter_matrix', 'price_matrix', 'label', 'assemble',
    'fit_scaler', 'apply_scaler', 'bow_matrix', 'build_instances', 'attach_history',
    'write_matrices', 'read_matrices',
    'TrainedModel', 'forward_cnn', 'forward_cnn_lstm', 'backward', 'predict', 'predict_batch',
    'train', 'grid_search',
    'Attribution', 'ImportanceTable', 'sample_perturbations', 'fit_surrogate', 'explain_instance',
    'aggregate', 'instance_series',
    'RunReport', 'split_chronological', 'run_experiment', 'emit_reports', 'generate_fixture',
]
