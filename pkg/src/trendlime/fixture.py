# -*- coding: utf-8 -*-
"""
Corpus sintético con señal plantada.

En la mitad de los días (al azar) el intervalo 20-22 de la noche previa
recibe una ráfaga de tweets y el día objetivo cierra al alza con
probabilidad 0.9; el resto de los días son monedas justas.
"""
import datetime
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from .config import PipelineConfig
from .errors import ConfigError
from .featurize import close_time

logger = logging.getLogger(__name__)

START = datetime.date(2018, 6, 1)
PLANTED_SHARE = 0.5
PLANTED_UP = 0.9
BURST_SIZE = (15, 26)       # tweets in the planted 20-22 burst, [lo, hi)
BASE_RATE = 0.25            # background tweets per hour
N_AUTHORS = 60
MIN_MOVE = 0.002            # |close / open - 1| >= 0.2%

_TEMPLATES = (
    u'${t} {k}',
    u'${t} daily thread #{k}',
    u'watching ${t} today {k}',
    u'${t} good news {k}',
    u'${t} bad day {k}',
    u'${t} chart &amp; levels {k}',
)


def _engagement(rng, burst):
    if burst:
        # Just above the default filter so the burst survives it.
        return int(rng.integers(20, 26)), int(rng.integers(5, 11)), int(rng.integers(15, 21))
    likes = int(rng.pareto(1.5) * 30)
    return likes, int(rng.integers(0, 15)), int(rng.integers(0, 25))


def _tweet(rng, serial, stamp, ticker, burst):
    likes, comments, retweets = _engagement(rng, burst)
    text = _TEMPLATES[int(rng.integers(len(_TEMPLATES)))].format(t=ticker, k=serial)
    return {
        'id': 't%06d' % serial,
        'author_id': 'u%03d' % int(rng.integers(N_AUTHORS)),
        'timestamp': pd.Timestamp(stamp).tz_convert('UTC').strftime('%Y-%m-%dT%H:%M:%SZ'),
        'text': text,
        'likes': likes,
        'comments': comments,
        'retweets': retweets,
        'ticker': ticker,
    }


def generate_fixture(seed, days, outdir, ticker='AAPL', tz=PipelineConfig.timezone):
    """
    Write ``tweets.csv``, ``<ticker>.csv``, ``manifest.json`` and
    ``config.json`` under ``outdir``. Same seed, same bytes.
    Returns the manifest.
    """
    if days < 10:
        raise ConfigError('fixture needs at least 10 trading days, got %d' % days)
    rng = np.random.default_rng(seed)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    dates = [d.date() for d in pd.bdate_range(START, periods=days)]

    planted = [False] + [bool(rng.random() < PLANTED_SHARE) for _ in dates[1:]]
    labels = [int(rng.random() < 0.5)] + [
        int(rng.random() < (PLANTED_UP if p else 0.5)) for p in planted[1:]
    ]

    bars = []
    price = 100.0
    for day, up in zip(dates, labels):
        open_ = round(price * (1.0 + rng.normal(0.0, 0.003)), 2)
        move = MIN_MOVE + abs(rng.normal(0.0, 0.01))
        close = round(open_ * (1.0 + move if up else 1.0 - move), 2)
        high = round(max(open_, close) + 0.01 + abs(rng.normal(0.0, 0.3)), 2)
        low = round(min(open_, close) - 0.01 - abs(rng.normal(0.0, 0.3)), 2)
        volume = int(rng.integers(2000000, 9000000))
        bars.append({'date': day.isoformat(), 'open': open_, 'high': high, 'low': low,
                     'close': close, 'volume': volume})
        price = close

    tweets = []
    serial = 0
    for i in range(1, len(dates)):
        start = pd.Timestamp(close_time(dates[i - 1], tz))
        end = pd.Timestamp(close_time(dates[i], tz))
        hours = (end - start).total_seconds() / 3600.0
        offsets = np.sort(rng.random(int(rng.poisson(BASE_RATE * hours))) * hours)
        for off in offsets:
            serial += 1
            tweets.append(_tweet(rng, serial, start + pd.Timedelta(seconds=int(off * 3600)), ticker, False))
        if planted[i]:
            # 20:00-22:00 local on the evening before the target day.
            burst_start = start + pd.Timedelta(hours=4)
            for off in np.sort(rng.random(int(rng.integers(*BURST_SIZE))) * 7199):
                serial += 1
                tweets.append(_tweet(rng, serial, burst_start + pd.Timedelta(seconds=int(off)), ticker, True))

    pd.DataFrame(tweets, columns=['id', 'author_id', 'timestamp', 'text', 'likes', 'comments',
                                  'retweets', 'ticker']).to_csv(outdir / 'tweets.csv', index=False)
    pd.DataFrame(bars, columns=['date', 'open', 'high', 'low', 'close', 'volume']).to_csv(
        outdir / ('%s.csv' % ticker), index=False)

    manifest = {
        'seed': seed,
        'days': days,
        'ticker': ticker,
        'timezone': tz,
        'start': dates[0].isoformat(),
        'end': dates[-1].isoformat(),
        'planted_share': PLANTED_SHARE,
        'planted_up_probability': PLANTED_UP,
        'burst_size': list(BURST_SIZE),
        'base_rate_per_hour': BASE_RATE,
        'authors': N_AUTHORS,
        'min_move': MIN_MOVE,
        'planted_days': [d.isoformat() for d, p in zip(dates, planted) if p],
        'n_tweets': len(tweets),
        'bayes_accuracy': PLANTED_SHARE * PLANTED_UP + (1 - PLANTED_SHARE) * 0.5,
    }
    (outdir / 'manifest.json').write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding='utf-8')
    config = {
        'experiment': {'tickers': [ticker], 'data_dir': str(outdir), 'seed': seed},
        'pipeline': {'study_start': dates[0].isoformat(), 'study_end': dates[-1].isoformat(), 'timezone': tz},
    }
    (outdir / 'config.json').write_text(json.dumps(config, indent=1, sort_keys=True), encoding='utf-8')
    logger.info('fixture: %d days (%d planted), %d tweets in %s',
                days, len(manifest['planted_days']), len(tweets), outdir)
    return manifest
