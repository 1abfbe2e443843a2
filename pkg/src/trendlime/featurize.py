# -*- coding: utf-8 -*-
"""
Construcción de las matrices de features por día de trading.

Una instancia para el día objetivo t es una matriz de 12 filas (intervalos
de 2 horas desde el cierre de las 16:00) por 16 columnas: 8 agregados de
Twitter y 8 valores de precio del día previo replicados en cada fila.
"""
import bisect
import datetime
import hashlib
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.utils import murmurhash3_32

from .config import (
    BOW_DIMS, CLOSE_HOUR, COLUMN_NAMES, FEATURE_SETS, N_ROWS, PRICE_COLUMNS,
    ROW_TIMES, SENTIMENT_COLUMNS, TWITTER_COLUMNS, PipelineConfig,
)
from .errors import ConfigError, OrderingError, ScalerMismatchError, ShapeError
from .ingest import AlignedCorpus, PriceBar, Tweet, filter_engagement
from .sentiment import SentimentScores, score_text
from .textprep import load_stopwords, normalize

logger = logging.getLogger(__name__)

# Columns with std below this are passed through unscaled.
MIN_STD = 1e-12


def total_engagement(tweet):
    # type: (Tweet) -> int
    """
    >>> from trendlime.ingest import Tweet
    >>> total_engagement(Tweet('1', 'a', None, '', likes=10, comments=5, retweets=3, ticker='AAPL'))
    18
    """
    return tweet.likes + tweet.comments + tweet.retweets


class WriterScoreLedger(object):
    """
    Running engagement totals per author.

    ``value`` answers with the sum of the author's engagement over posts
    strictly earlier than the asked timestamp. Posts sharing the frontier
    timestamp stay pending until time moves forward, so they never see
    each other.
    """

    def __init__(self, scope='global'):
        if scope not in ('global', 'per_ticker'):
            raise ConfigError('unknown ledger scope %r' % (scope,))
        self.scope = scope
        self.frontier = None
        self._totals = defaultdict(int)
        self._pending = defaultdict(int)

    def _key(self, tweet):
        if self.scope == 'per_ticker':
            return (tweet.ticker, tweet.author_id)
        return tweet.author_id

    def _sync(self, timestamp):
        if self.frontier is not None and timestamp < self.frontier:
            raise OrderingError('ledger is at %s, cannot answer for earlier post at %s'
                                % (self.frontier, timestamp))
        if self.frontier is None or timestamp > self.frontier:
            for key, te in self._pending.items():
                self._totals[key] += te
            self._pending.clear()
            self.frontier = timestamp

    def value(self, tweet):
        self._sync(tweet.timestamp)
        return self._totals.get(self._key(tweet), 0)

    def advance(self, tweet):
        self._sync(tweet.timestamp)
        self._pending[self._key(tweet)] += total_engagement(tweet)


def writer_score(ledger, tweet):
    """Current ledger value for the tweet's author; the caller advances the ledger after."""
    return ledger.value(tweet)


def writer_scores(tweets, scope='global'):
    """
    Sequential ledger pass over ``tweets``; returns
    ``{(tweet.id, tweet.ticker): writer score}``. A post filed under several
    tickers is credited once to a global ledger and every filing gets the
    same score.
    """
    ledger = WriterScoreLedger(scope)
    scores = {}
    credited = {}
    for tweet in sorted(tweets, key=lambda t: t.timestamp):
        post = tweet.id if scope == 'global' else (tweet.id, tweet.ticker)
        if post not in credited:
            credited[post] = writer_score(ledger, tweet)
            ledger.advance(tweet)
        scores[(tweet.id, tweet.ticker)] = credited[post]
    return scores


@dataclass(frozen=True)
class ScoredTweet:
    tweet: Tweet
    writer_score: int
    sentiment: SentimentScores
    tokens: Tuple[str, ...] = ()

    @property
    def timestamp(self):
        return self.tweet.timestamp


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    day: Optional[datetime.date] = None
    row_times: Tuple[str, ...] = ROW_TIMES
    column_names: Tuple[str, ...] = COLUMN_NAMES

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class LabeledInstance:
    day: datetime.date
    x: FeatureMatrix
    y: int
    # Predecessor matrices, newest first: (t-2, t-3).
    history: Tuple[FeatureMatrix, ...] = ()
    scaler_fingerprint: Optional[str] = None

    @property
    def values(self):
        return self.x.values

    def sequence(self):
        """Matrices oldest first, as the recurrent model consumes them."""
        return tuple(m.values for m in reversed(self.history)) + (self.x.values,)


def close_time(day, tz):
    """Exchange-local 16:00 of ``day`` as an aware UTC datetime."""
    local = pd.Timestamp(datetime.datetime.combine(day, datetime.time(CLOSE_HOUR))).tz_localize(tz)
    return local.tz_convert('UTC').to_pydatetime()


def row_index(timestamp, tz):
    """Bucket row of a timestamp: row 0 is 16-18 local, row 11 is 14-16."""
    hour = pd.Timestamp(timestamp).tz_convert(tz).hour
    return ((hour - CLOSE_HOUR) % 24) // 2


def bucket(tweets, start, end, tz):
    # type: (Sequence, datetime.datetime, datetime.datetime, str) -> List[list]
    """
    Split the tweets posted in ``[start, end)`` into the 12 two-hour groups.
    ``tweets`` must be sorted by timestamp. Windows longer than a day
    (weekends, holidays) fold onto the same 12 rows by local time of day.
    """
    groups = [[] for _ in range(N_ROWS)]
    stamps = [t.timestamp for t in tweets]
    lo = bisect.bisect_left(stamps, start)
    hi = bisect.bisect_left(stamps, end)
    for tweet in tweets[lo:hi]:
        groups[row_index(tweet.timestamp, tz)].append(tweet)
    return groups


def day_window(bars, i, policy, tz):
    """Bucketing interval for the instance whose target bar is ``bars[i]``."""
    if policy == 'target_close':
        return close_time(bars[i - 1].date, tz), close_time(bars[i].date, tz)
    if policy == 'prior_close':
        return close_time(bars[i - 2].date, tz), close_time(bars[i - 1].date, tz)
    raise ConfigError('unknown window_end policy %r' % (policy,))


def twitter_matrix(buckets):
    """
    12x8 block of per-interval sums: writer score, comments, likes,
    retweets, afinn, vader, polarity, plus the tweet count. Writer scores
    come from the sequential ledger pass already stored on each tweet.
    """
    out = np.zeros((N_ROWS, len(TWITTER_COLUMNS)), dtype=float)
    if len(buckets) != N_ROWS:
        raise ShapeError('expected %d buckets, got %d' % (N_ROWS, len(buckets)))
    for row, group in enumerate(buckets):
        for item in group:
            tweet = item.tweet
            out[row] += (
                item.writer_score, tweet.comments, tweet.likes, tweet.retweets,
                item.sentiment.afinn, item.sentiment.vader, item.sentiment.polarity, 1,
            )
    return out


def price_matrix(prior_bar, lags):
    # type: (PriceBar, Sequence[int]) -> np.ndarray
    """
    >>> from trendlime.ingest import PriceBar
    >>> m = price_matrix(PriceBar(None, 100, 110, 95, 105, 1000000, 'X'), (1, 0, 1))
    >>> m.shape, m[7].tolist()
    ((12, 8), [100.0, 110.0, 95.0, 105.0, 1000000.0, 1.0, 0.0, 1.0])
    """
    if len(lags) != 3:
        raise ShapeError('price block needs 3 lags, got %d' % len(lags))
    row = [prior_bar.open, prior_bar.high, prior_bar.low, prior_bar.close,
           prior_bar.volume] + [int(v) for v in lags]
    return np.tile(np.asarray(row, dtype=float), (N_ROWS, 1))


def label(bar):
    """1 when the day closed above its open; ties count as not up."""
    return 1 if bar.close > bar.open else 0


def assemble(twitter, price, day=None, column_names=COLUMN_NAMES):
    twitter = np.asarray(twitter, dtype=float)
    price = np.asarray(price, dtype=float)
    if twitter.ndim != 2 or price.ndim != 2 or twitter.shape[0] != N_ROWS or price.shape[0] != N_ROWS:
        raise ShapeError('cannot join blocks of shape %s and %s' % (twitter.shape, price.shape))
    values = np.hstack([twitter, price])
    if values.shape[1] != len(column_names):
        raise ShapeError('%d columns but %d names' % (values.shape[1], len(column_names)))
    return FeatureMatrix(values=values, day=day, row_times=ROW_TIMES, column_names=tuple(column_names))


def bow_matrix(buckets, dim, seed=PipelineConfig.hash_seed):
    """Hashed token counts per interval."""
    out = np.zeros((N_ROWS, dim), dtype=float)
    for row, group in enumerate(buckets):
        for item in group:
            for token in item.tokens:
                out[row, murmurhash3_32(token, seed=seed, positive=True) % dim] += 1
    return out


def feature_columns(feature_set):
    if feature_set == 'proposed':
        return COLUMN_NAMES
    if feature_set in BOW_DIMS:
        return tuple('bow_%d' % k for k in range(BOW_DIMS[feature_set])) + PRICE_COLUMNS
    if feature_set == 'sentiment_price':
        return SENTIMENT_COLUMNS + PRICE_COLUMNS
    if feature_set == 'price_only':
        return PRICE_COLUMNS
    raise ConfigError('unknown feature set %r' % (feature_set,))


_SENTIMENT_IDX = [TWITTER_COLUMNS.index(c) for c in SENTIMENT_COLUMNS]


def feature_matrix(feature_set, buckets, price, day, config):
    """Matrix for one day under one of the benchmark feature sets."""
    names = feature_columns(feature_set)
    if feature_set == 'proposed':
        left = twitter_matrix(buckets)
    elif feature_set in BOW_DIMS:
        left = bow_matrix(buckets, BOW_DIMS[feature_set], config.hash_seed)
    elif feature_set == 'sentiment_price':
        left = twitter_matrix(buckets)[:, _SENTIMENT_IDX]
    else:
        left = np.zeros((N_ROWS, 0))
    return assemble(left, price, day=day, column_names=names)


def score_tweets(corpus, history=None, config=None):
    # type: (AlignedCorpus, Optional[Sequence[Tweet]], Optional[PipelineConfig]) -> List[ScoredTweet]
    """
    Writer scores, sentiment and BOW tokens for the corpus tweets that pass
    the engagement filter. The ledger runs over ``history`` (every loaded
    tweet, before windowing and filtering), defaulting to the corpus.
    """
    config = config or PipelineConfig()
    history = corpus.tweets if history is None else history
    scores = writer_scores(history, config.ledger_scope)
    stopwords = load_stopwords(config.stopwords_path)
    kept = filter_engagement(corpus.tweets, config.engagement_threshold)
    logger.info('%d of %d tweets pass engagement >= %d',
                len(kept), len(corpus.tweets), config.engagement_threshold)
    out = []
    for tweet in kept:
        key = (tweet.id, tweet.ticker)
        if key not in scores:
            raise OrderingError('tweet %s (%s) missing from the writer-score history' % key)
        out.append(ScoredTweet(
            tweet=tweet,
            writer_score=scores[key],
            sentiment=score_text(tweet.text, config, stopwords),
            tokens=tuple(normalize(tweet.text, stopwords)),
        ))
    return out


def build_instances(corpus, history=None, feature_set='proposed', config=None, scored=None):
    """
    One labeled instance per trading day with three prior labels and an
    unbroken prior bar. ``scored`` lets several feature sets share one
    scoring pass.
    """
    if feature_set not in FEATURE_SETS:
        raise ConfigError('unknown feature set %r' % (feature_set,))
    config = config or PipelineConfig()
    if scored is None:
        scored = score_tweets(corpus, history, config)
    bars = corpus.bars
    labels = [label(b) for b in bars]
    instances = []
    skipped = 0
    for i in range(config.n_lags, len(bars)):
        gap = (bars[i].date - bars[i - 1].date).days
        if gap > config.max_gap_days:
            logger.warning('%s: prior bar missing (%d-day gap), instance skipped', bars[i].date, gap)
            skipped += 1
            continue
        start, end = day_window(bars, i, config.window_end, config.timezone)
        buckets = bucket(scored, start, end, config.timezone)
        lags = [labels[i - k] for k in range(1, config.n_lags + 1)]
        price = price_matrix(bars[i - 1], lags)
        matrix = feature_matrix(feature_set, buckets, price, bars[i].date, config)
        instances.append(LabeledInstance(day=bars[i].date, x=matrix, y=labels[i]))
    if len(bars) <= config.n_lags:
        logger.warning('only %d bars, no instance has %d prior labels', len(bars), config.n_lags)
    logger.info('%s: %d instances (%d skipped)', feature_set, len(instances), skipped)
    return instances


def attach_history(instances, steps=3):
    """Give each instance its predecessors' matrices; the first ``steps - 1`` have none and are dropped."""
    out = []
    for idx in range(steps - 1, len(instances)):
        prior = tuple(instances[idx - k].x for k in range(1, steps))
        out.append(replace(instances[idx], history=prior))
    return out


@dataclass(frozen=True, eq=False)
class ColumnScaler:
    mean: np.ndarray
    std: np.ndarray
    fingerprint: str = field(default='')

    @classmethod
    def build(cls, mean, std):
        mean = np.asarray(mean, dtype=float)
        std = np.asarray(std, dtype=float)
        digest = hashlib.sha256(mean.tobytes() + std.tobytes()).hexdigest()[:16]
        return cls(mean=mean, std=std, fingerprint=digest)

    def transform(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.mean.shape[0]:
            raise ShapeError('scaler fitted on %d columns, got %d' % (self.mean.shape[0], values.shape[-1]))
        usable = self.std >= MIN_STD
        safe_std = np.where(usable, self.std, 1.0)
        return np.where(usable, (values - self.mean) / safe_std, values)

    def to_dict(self):
        return {'mean': self.mean.tolist(), 'std': self.std.tolist(), 'fingerprint': self.fingerprint}

    @classmethod
    def from_dict(cls, data):
        scaler = cls.build(data['mean'], data['std'])
        if data.get('fingerprint') and data['fingerprint'] != scaler.fingerprint:
            raise ScalerMismatchError('stored scaler fingerprint does not match its statistics')
        return scaler


def fit_scaler(instances):
    """Per-column z-score statistics over every row of every training matrix."""
    if not instances:
        raise ShapeError('cannot fit a scaler on zero instances')
    stacked = np.vstack([inst.values for inst in instances])
    return ColumnScaler.build(stacked.mean(axis=0), stacked.std(axis=0))


def apply_scaler(instance, scaler):
    if instance.scaler_fingerprint is not None:
        raise ScalerMismatchError('instance for %s is already scaled (%s)'
                                  % (instance.day, instance.scaler_fingerprint))
    return replace(
        instance,
        x=replace(instance.x, values=scaler.transform(instance.x.values)),
        history=tuple(replace(m, values=scaler.transform(m.values)) for m in instance.history),
        scaler_fingerprint=scaler.fingerprint,
    )


def matrix_record(instance):
    matrix = instance.x
    return {
        'day': matrix.day.isoformat() if matrix.day else instance.day.isoformat(),
        'label': int(instance.y),
        'row_times': list(matrix.row_times),
        'column_names': list(matrix.column_names),
        'values': matrix.values.tolist(),
    }


def write_matrices(instances, path):
    """One JSON object per line: day, label, row_times, column_names, values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='\n') as fh:
        for instance in instances:
            fh.write(json.dumps(matrix_record(instance)) + '\n')
    return path


def read_matrices(path):
    instances = []
    with Path(path).open(encoding='utf-8') as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            day = datetime.date.fromisoformat(record['day'])
            values = np.asarray(record['values'], dtype=float)
            if values.shape != (N_ROWS, len(record['column_names'])):
                raise ShapeError('%s: matrix for %s has shape %s' % (path, day, values.shape))
            matrix = FeatureMatrix(values=values, day=day,
                                   row_times=tuple(record['row_times']),
                                   column_names=tuple(record['column_names']))
            instances.append(LabeledInstance(day=day, x=matrix, y=int(record['label'])))
    return instances
