# -*- coding: utf-8 -*-
"""
Lectura de tweets y barras de precio, recorte a la ventana de estudio y
filtro de engagement.
"""
import datetime
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import pandas as pd

from .config import PipelineConfig
from .errors import (
    ConfigError, DataIntegrityError, EmptyWindowError, MissingInputError,
    SchemaError,
)

logger = logging.getLogger(__name__)

TWEET_COLUMNS = ('id', 'author_id', 'timestamp', 'text', 'likes', 'comments', 'retweets', 'ticker')
BAR_COLUMNS = ('date', 'open', 'high', 'low', 'close', 'volume')
_JSON_SUFFIXES = ('.jsonl', '.ndjson', '.json')


@dataclass(frozen=True)
class Tweet:
    id: str
    author_id: str
    timestamp: datetime.datetime
    text: str
    likes: int
    comments: int
    retweets: int
    ticker: str


@dataclass(frozen=True)
class PriceBar:
    date: datetime.date
    open: float
    high: float
    low: float
    close: float
    volume: int
    ticker: str


@dataclass(frozen=True)
class AlignedCorpus:
    tweets: Tuple[Tweet, ...]
    bars: Tuple[PriceBar, ...]
    window: Tuple[datetime.date, datetime.date]


def _require(path):
    path = Path(path)
    if not path.exists():
        raise MissingInputError('input file not found: %s' % path)
    return path


def _read_frame(path):
    """Read a delimited or line-JSON file as an all-string frame."""
    if path.stat().st_size == 0:
        return None
    suffix = path.suffix.lower()
    try:
        if suffix in _JSON_SUFFIXES:
            frame = pd.read_json(path, lines=True, dtype=False,
                                 convert_dates=False, keep_default_dates=False)
            return frame.astype(object).where(frame.notna(), '').astype(str)
        sep = '\t' if suffix == '.tsv' else ','
        return pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return None
    except ValueError as exc:
        raise SchemaError('cannot parse %s: %s' % (path, exc))


def _parse_count(value, name):
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValueError('%s is not a number: %r' % (name, value))
    if not math.isfinite(number):
        raise ValueError('%s is not finite: %r' % (name, value))
    if number != int(number):
        raise ValueError('%s is not an integer: %r' % (name, value))
    if number < 0:
        raise ValueError('%s is negative: %r' % (name, value))
    return int(number)


def _parse_timestamp(value):
    stamp = pd.Timestamp(value)
    if pd.isna(stamp):
        raise ValueError('empty timestamp')
    if stamp.tzinfo is None:
        stamp = stamp.tz_localize('UTC')
    else:
        stamp = stamp.tz_convert('UTC')
    return stamp.floor('s').to_pydatetime()


def _parse_tweet(row):
    try:
        timestamp = _parse_timestamp(row['timestamp'])
    except (ValueError, TypeError, OverflowError) as exc:
        raise ValueError('bad timestamp %r (%s)' % (row['timestamp'], exc))
    return Tweet(
        id=str(row['id']).strip(),
        author_id=str(row['author_id']).strip(),
        timestamp=timestamp,
        text=str(row['text']),
        likes=_parse_count(row['likes'], 'likes'),
        comments=_parse_count(row['comments'], 'comments'),
        retweets=_parse_count(row['retweets'], 'retweets'),
        ticker=str(row['ticker']).strip().upper(),
    )


def load_tweets(path, ticker=None, rejects=None, reject_rate_limit=PipelineConfig.reject_rate_limit):
    # type: (Path, Optional[str], Optional[list], float) -> List[Tweet]
    """
    Load tweets for one ticker (all tickers when ``ticker`` is None).

    Rows with unparseable timestamps or bad counts are skipped and recorded
    in ``rejects`` as ``(row_number, reason)``. When more than
    ``reject_rate_limit`` of all rows are bad the file is assumed to have
    the wrong schema and SchemaError is raised.
    """
    path = _require(path)
    frame = _read_frame(path)
    if frame is None or frame.empty:
        logger.warning('tweet file %s is empty', path)
        return []
    missing = [c for c in TWEET_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError('tweet file %s lacks columns %s' % (path, ', '.join(missing)))

    wanted = ticker.upper() if ticker else None
    bad = []
    tweets = []
    for number, row in enumerate(frame.to_dict('records'), start=1):
        try:
            tweet = _parse_tweet(row)
        except ValueError as exc:
            bad.append((number, str(exc)))
            continue
        if wanted is None or tweet.ticker == wanted:
            tweets.append(tweet)

    if rejects is not None:
        rejects.extend(bad)
    if bad:
        logger.warning('%s: rejected %d of %d rows (first: row %d, %s)',
                       path, len(bad), len(frame), bad[0][0], bad[0][1])
        if len(bad) > reject_rate_limit * len(frame):
            raise SchemaError('%s: %d of %d rows rejected, above the %.0f%% limit; schema mismatch?'
                              % (path, len(bad), len(frame), reject_rate_limit * 100))

    tweets.sort(key=lambda t: t.timestamp)
    # One post may be filed under several tickers; each filing is kept.
    seen = set()
    unique = []
    for tweet in tweets:
        if (tweet.id, tweet.ticker) in seen:
            continue
        seen.add((tweet.id, tweet.ticker))
        unique.append(tweet)
    if len(unique) != len(tweets):
        logger.warning('%s: dropped %d duplicate tweet ids', path, len(tweets) - len(unique))
    logger.info('loaded %d tweets from %s', len(unique), path)
    return unique


def _check_bar(bar):
    if bar.high < bar.low:
        raise DataIntegrityError('%s %s: high %r below low %r' % (bar.ticker, bar.date, bar.high, bar.low))
    if bar.low > min(bar.open, bar.close) or bar.high < max(bar.open, bar.close):
        raise DataIntegrityError('%s %s: OHLC out of range (o=%r h=%r l=%r c=%r)'
                                 % (bar.ticker, bar.date, bar.open, bar.high, bar.low, bar.close))
    if bar.volume < 0:
        raise DataIntegrityError('%s %s: negative volume' % (bar.ticker, bar.date))


def load_bars(path, ticker):
    # type: (Path, str) -> List[PriceBar]
    """Load daily OHLCV bars, sorted by date. Corrupt data is fatal."""
    path = _require(path)
    frame = _read_frame(path)
    if frame is None or frame.empty:
        logger.warning('bar file %s is empty', path)
        return []
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in BAR_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError('bar file %s lacks columns %s' % (path, ', '.join(missing)))
    symbol = ticker.upper()
    if 'ticker' in frame.columns:
        frame = frame[frame['ticker'].str.strip().str.upper() == symbol]

    bars = []
    for number, row in enumerate(frame.to_dict('records'), start=1):
        try:
            bar = PriceBar(
                date=datetime.date.fromisoformat(str(row['date']).strip()[:10]),
                open=float(row['open']),
                high=float(row['high']),
                low=float(row['low']),
                close=float(row['close']),
                volume=_parse_count(row['volume'], 'volume'),
                ticker=symbol,
            )
        except ValueError as exc:
            raise DataIntegrityError('%s row %d: %s' % (path, number, exc))
        if not all(math.isfinite(v) for v in (bar.open, bar.high, bar.low, bar.close)):
            raise DataIntegrityError('%s row %d: non-finite price' % (path, number))
        _check_bar(bar)
        bars.append(bar)

    bars.sort(key=lambda b: b.date)
    for prev, cur in zip(bars, bars[1:]):
        if prev.date == cur.date:
            raise DataIntegrityError('%s: duplicate bar date %s' % (path, cur.date))
    logger.info('loaded %d %s bars from %s', len(bars), symbol, path)
    return bars


def local_date(timestamp, tz):
    return pd.Timestamp(timestamp).tz_convert(tz).date()


def window(tweets, bars, start, end, config=None):
    """Crop both series inclusively to ``[start, end]`` (exchange-local dates)."""
    config = config or PipelineConfig()
    if start > end:
        raise ConfigError('window start %s is after end %s' % (start, end))
    kept_tweets = tuple(t for t in tweets if start <= local_date(t.timestamp, config.timezone) <= end)
    kept_bars = tuple(b for b in bars if start <= b.date <= end)
    counts = {
        'tweets_in': len(tweets), 'tweets_kept': len(kept_tweets),
        'bars_in': len(bars), 'bars_kept': len(kept_bars),
    }
    if not kept_tweets or not kept_bars:
        raise EmptyWindowError('window %s..%s is empty: %r' % (start, end, counts), counts)
    logger.info('window %s..%s: %d tweets, %d bars', start, end, len(kept_tweets), len(kept_bars))
    return AlignedCorpus(tweets=kept_tweets, bars=kept_bars, window=(start, end))


def filter_engagement(tweets, threshold=PipelineConfig.engagement_threshold):
    """Keep tweets whose likes + comments + retweets reach ``threshold``."""
    from .featurize import total_engagement
    return [t for t in tweets if total_engagement(t) >= threshold]
