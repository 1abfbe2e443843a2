# -*- coding: utf-8 -*-
"""
Configuración y constantes para trendlime.
"""
import datetime
import json
import os
import re
from pathlib import Path

from .errors import ConfigError

DATA_DIR = Path(__file__).resolve().parent / 'data'

# Expresiones regulares (exportadas para uso en otros módulos)
_url_re = re.compile(r'^(?:https?://|www\.)\S*$', re.I | re.U)
_mention_re = re.compile(r'^@\w+', re.U)
_strip_re = re.compile(r'[\W_]+', re.U)
_edge_punct_re = re.compile(r'^[\W_]+|[\W_]+$', re.U)

# Feature matrix layout
N_ROWS = 12
TWITTER_COLUMNS = (
    'writer_score', 'n_comments', 'n_likes', 'n_retweets',
    'afinn', 'vader', 'polarity_sum', 'tweet_volume',
)
PRICE_COLUMNS = (
    'open', 'high', 'low', 'close', 'trade_volume', 'lag1', 'lag2', 'lag3',
)
COLUMN_NAMES = TWITTER_COLUMNS + PRICE_COLUMNS
SENTIMENT_COLUMNS = ('afinn', 'vader', 'polarity_sum')

# Rows start at the 16:00 close; row i covers [16 + 2i, 18 + 2i) modulo 24.
ROW_TIMES = (
    '16-18', '18-20', '20-22', '22-24', '0-2', '2-4',
    '4-6', '6-8', '8-10', '10-12', '12-14', '14-16',
)
MARKET_OPEN_ROWS = frozenset(['8-10', '10-12', '12-14', '14-16'])
CLOSE_HOUR = 16

FEATURE_SETS = ('proposed', 'bow8', 'bow16', 'bow24', 'sentiment_price', 'price_only')
BOW_DIMS = {'bow8': 8, 'bow16': 16, 'bow24': 24}
ARCHS = ('cnn', 'cnn_lstm')

# Accuracy table row order; doc2vec rows are kept as "n/a" to preserve the table shape.
TABLE_ROWS = (
    ('proposed', 'Proposed feature matrix'),
    ('bow8', 'BOW 8'),
    ('bow16', 'BOW 16'),
    ('bow24', 'BOW 24'),
    ('doc2vec8', 'DOC2VEC 8'),
    ('doc2vec16', 'DOC2VEC 16'),
    ('doc2vec24', 'DOC2VEC 24'),
    ('sentiment_price', 'Sentiment + Price'),
    ('price_only', 'Price only'),
)
ARCH_LABELS = {'cnn': 'CNN', 'cnn_lstm': 'CNN-LSTM'}

ENV_DATA_DIR = 'TRENDLIME_DATA_DIR'
ENV_TWEETS = 'TRENDLIME_TWEETS'
ENV_BARS = 'TRENDLIME_BARS'


def row_label(row_time):
    """'20-22' -> '20-22 (Market Closed)'."""
    state = 'Market Open' if row_time in MARKET_OPEN_ROWS else 'Market Closed'
    return '%s (%s)' % (row_time, state)


def _as_date(value):
    if isinstance(value, datetime.datetime):
        return value.date()
    if isinstance(value, datetime.date):
        return value
    try:
        return datetime.date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError('not an ISO date: %r' % (value,))


class _Settings(object):
    """
    Plain settings object: class attributes are the defaults, keyword
    overrides land on the instance. Unknown keys are rejected so that a
    typo in a config file does not silently fall back to a default.
    """

    def __init__(self, **overrides):
        for key, value in overrides.items():
            if key.startswith('_') or not hasattr(type(self), key):
                raise ConfigError('%s has no setting %r' % (type(self).__name__, key))
            setattr(self, key, value)
        self.validate()

    @classmethod
    def keys(cls):
        return sorted(
            k for k in dir(cls)
            if not k.startswith('_')
            and not callable(getattr(cls, k))
            and not isinstance(getattr(cls, k), property)
        )

    def validate(self):
        pass

    def as_dict(self):
        out = {}
        for key in self.keys():
            value = getattr(self, key)
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, (datetime.date, Path)):
                value = str(value)
            out[key] = value
        return out

    def replace(self, **overrides):
        values = {key: getattr(self, key) for key in self.keys()}
        values.update(overrides)
        return type(self)(**values)

    def __eq__(self, other):
        return type(self) is type(other) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return '%s(%s)' % (type(self).__name__, ', '.join(
            '%s=%r' % kv for kv in sorted(self.as_dict().items())))


class PipelineConfig(_Settings):
    """Data-side settings: ingestion, text, sentiment and matrix assembly."""

    # Exchange-local zone used for windowing and bucketing. The corpus zone
    # is not documented upstream; timestamps are read as UTC.
    timezone = 'US/Eastern'
    study_start = '2018-06-01'
    study_end = '2019-12-31'

    engagement_threshold = 40
    # Abort the load when more than this share of rows is rejected.
    reject_rate_limit = 0.10

    stopwords_path = None       # None -> bundled data/stopwords_en.txt
    afinn_path = None           # None -> AFINN-111 from the afinn package
    vader_lexicon_path = None   # None -> lexicon shipped with vaderSentiment

    pos_threshold = 0.05
    neg_threshold = 0.05

    # 'target_close': buckets end at 16:00 of the target day.
    # 'prior_close': buckets end at 16:00 of the prior trading day.
    window_end = 'target_close'
    # 'global' or 'per_ticker' writer-score history.
    ledger_scope = 'global'

    hash_seed = 17
    n_lags = 3
    # Consecutive bars further apart than this (calendar days) mean the
    # prior bar of the later day is missing.
    max_gap_days = 5

    def validate(self):
        if self.window_end not in ('target_close', 'prior_close'):
            raise ConfigError('window_end must be target_close or prior_close, got %r' % (self.window_end,))
        if self.ledger_scope not in ('global', 'per_ticker'):
            raise ConfigError('ledger_scope must be global or per_ticker, got %r' % (self.ledger_scope,))
        if self.engagement_threshold < 0:
            raise ConfigError('engagement_threshold must be >= 0')
        if self.pos_threshold <= 0 or self.neg_threshold <= 0:
            raise ConfigError('polarity thresholds must be > 0')
        if _as_date(self.study_start) > _as_date(self.study_end):
            raise ConfigError('study_start is after study_end')

    @property
    def window(self):
        return _as_date(self.study_start), _as_date(self.study_end)


class ModelConfig(_Settings):
    """Architecture and training settings for the CNN / CNN-LSTM predictors."""

    arch = 'cnn'
    # 1, 2 or 'auto' (2 when the second pool still leaves a 2x2 grid).
    conv_blocks = 2
    kernel = (3, 3)
    channels = (8, 16)
    pool = (2, 2)
    dense_hidden = 32
    lstm_hidden = 32
    timesteps = 3

    l2 = 0.0
    learning_rate = 1e-3
    beta1 = 0.9
    beta2 = 0.999
    adam_eps = 1e-8
    epochs = 300
    batch_size = 16
    seed = 0

    grid = (0.0, 1e-4, 1e-3, 1e-2)
    grid_repeats = 1

    def validate(self):
        if self.arch not in ARCHS:
            raise ConfigError('arch must be one of %s, got %r' % (ARCHS, self.arch))
        if self.conv_blocks not in (1, 2, 'auto'):
            raise ConfigError('conv_blocks must be 1, 2 or auto')
        if self.timesteps != 3:
            raise ConfigError('cnn_lstm consumes exactly 3 timesteps')
        if self.l2 < 0:
            raise ConfigError('l2 must be >= 0')
        if not self.grid:
            raise ConfigError('l2 grid is empty')
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError('epochs and batch_size must be >= 1')

    def blocks_for(self, input_shape):
        """Resolve the number of conv blocks for an (H, W) input."""
        if self.conv_blocks != 'auto':
            return int(self.conv_blocks)
        pooled = min(input_shape) // self.pool[0]
        return 2 if pooled >= 2 * self.pool[0] else 1


class LimeSettings(_Settings):
    """Local surrogate sampling and fitting."""

    n_samples = 2000
    kernel_width = 0.25
    l2_ridge = 1e-3
    keep_probability = 0.5
    # Thread fan-out for black-box predictions; results keep sample order.
    workers = 1
    chunk_size = 500
    seed = 0

    def validate(self):
        if self.kernel_width <= 0:
            raise ConfigError('kernel_width must be > 0')
        if self.l2_ridge <= 0:
            raise ConfigError('l2_ridge must be > 0')
        if self.workers < 1:
            raise ConfigError('workers must be >= 1')


class ExperimentConfig(_Settings):
    """Top-level experiment grid."""

    tickers = ('AAPL', 'AMZN', 'TSLA')
    data_dir = 'data'
    # Tweets: one file for every ticker. Bars: one file per ticker.
    tweets_path = '{data_dir}/tweets.csv'
    bars_path = '{data_dir}/{ticker}.csv'
    feature_sets = FEATURE_SETS
    archs = ARCHS
    repeats = 10
    split = (0.7, 0.1, 0.2)
    seed = 0
    explain = True
    # Explanations run on the proposed-feature CNN cell unless this is set.
    explain_all = False

    pipeline = None
    model = None
    lime = None

    def validate(self):
        if self.repeats < 1:
            raise ConfigError('repeats must be >= 1')
        if len(self.split) != 3 or abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError('split fractions must be three values summing to 1')
        for fs in self.feature_sets:
            if fs not in FEATURE_SETS:
                raise ConfigError('unknown feature set %r' % (fs,))
        for arch in self.archs:
            if arch not in ARCHS:
                raise ConfigError('unknown arch %r' % (arch,))
        self.tickers = tuple(self.tickers)
        self.split = tuple(self.split)
        self.feature_sets = tuple(self.feature_sets)
        self.archs = tuple(self.archs)
        if self.pipeline is None:
            self.pipeline = PipelineConfig()
        if self.model is None:
            self.model = ModelConfig()
        if self.lime is None:
            self.lime = LimeSettings()

    def as_dict(self):
        out = super(ExperimentConfig, self).as_dict()
        out['pipeline'] = self.pipeline.as_dict()
        out['model'] = self.model.as_dict()
        out['lime'] = self.lime.as_dict()
        return out

    def resolve_tweets_path(self):
        path = os.environ.get(ENV_TWEETS) or self.tweets_path
        return Path(path.format(data_dir=self._data_dir()))

    def resolve_bars_path(self, ticker):
        path = os.environ.get(ENV_BARS) or self.bars_path
        return Path(path.format(data_dir=self._data_dir(), ticker=ticker))

    def _data_dir(self):
        return os.environ.get(ENV_DATA_DIR) or self.data_dir


def _tuples(section):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in section.items()}


def config_from_dict(raw):
    """Build an ExperimentConfig from a mapping with optional sections."""
    raw = dict(raw)
    pipeline = PipelineConfig(**_tuples(raw.pop('pipeline', {}) or {}))
    model = ModelConfig(**_tuples(raw.pop('model', {}) or {}))
    lime = LimeSettings(**_tuples(raw.pop('lime', {}) or {}))
    experiment = dict(raw.pop('experiment', {}) or {})
    # Top-level keys are accepted as experiment keys as well.
    experiment.update(raw)
    return ExperimentConfig(pipeline=pipeline, model=model, lime=lime, **_tuples(experiment))


def load_config(path):
    """Read a JSON key-value config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError('config file not found: %s' % path)
    try:
        raw = json.loads(path.read_text(encoding='utf-8'))
    except ValueError as exc:
        raise ConfigError('config file %s is not valid JSON: %s' % (path, exc))
    if not isinstance(raw, dict):
        raise ConfigError('config file %s must hold an object' % path)
    return config_from_dict(raw)
