from __future__ import annotations

import datetime
import json
import logging
from pathlib import Path

import pytest

from trendlime import PipelineConfig
from trendlime.errors import DataIntegrityError, EmptyWindowError, MissingInputError, SchemaError
from trendlime.ingest import Tweet, filter_engagement, load_bars, load_tweets, window

TWEET_HEADER = "id,author_id,timestamp,text,likes,comments,retweets,ticker"
BAR_HEADER = "date,open,high,low,close,volume"


def _write(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _row(i: int, ticker: str = "AAPL", likes: int = 50, stamp: str | None = None) -> str:
    stamp = stamp or "2018-06-%02dT15:00:00Z" % (1 + i % 28)
    return "%d,u%d,%s,$%s tweet %d,%d,0,0,%s" % (i, i % 3, stamp, ticker, i, likes, ticker)


def _tweet(i: int, day: datetime.date, likes=20, comments=10, retweets=10) -> Tweet:
    stamp = datetime.datetime.combine(day, datetime.time(15), tzinfo=datetime.timezone.utc)
    return Tweet(str(i), "a", stamp, "x", likes, comments, retweets, "AAPL")


def test_load_tweets_filters_by_ticker(tmp_path):
    path = _write(tmp_path / "t.csv", [TWEET_HEADER, _row(1), _row(2), _row(3), _row(4, ticker="TSLA")])
    tweets = load_tweets(path, "AAPL")
    assert [t.id for t in tweets] == ["1", "2", "3"]
    assert all(t.ticker == "AAPL" for t in tweets)


def test_load_tweets_sorted_and_deduplicated(tmp_path):
    rows = [
        _row(1, stamp="2018-06-03T10:00:00Z"),
        _row(2, stamp="2018-06-01T10:00:00Z"),
        _row(1, stamp="2018-06-05T10:00:00Z"),
    ]
    tweets = load_tweets(_write(tmp_path / "t.csv", [TWEET_HEADER] + rows), "AAPL")
    assert [t.id for t in tweets] == ["2", "1"]
    assert tweets == sorted(tweets, key=lambda t: t.timestamp)


def test_naive_timestamps_are_utc(tmp_path):
    path = _write(tmp_path / "t.csv", [TWEET_HEADER, _row(1, stamp="2018-06-01 20:00:00")])
    (tweet,) = load_tweets(path, "AAPL")
    assert tweet.timestamp == datetime.datetime(2018, 6, 1, 20, tzinfo=datetime.timezone.utc)


def test_negative_count_rejected(tmp_path):
    rows = [_row(i) for i in range(9)] + [_row(9, likes=-1)]
    rejects = []
    tweets = load_tweets(_write(tmp_path / "t.csv", [TWEET_HEADER] + rows), "AAPL", rejects=rejects)
    assert len(tweets) == 9
    assert len(rejects) == 1
    assert rejects[0][0] == 10
    assert "negative" in rejects[0][1]


def test_unparseable_timestamp_rejected(tmp_path):
    rows = [_row(i) for i in range(10)] + [_row(10, stamp="yesterday-ish")]
    rejects = []
    load_tweets(_write(tmp_path / "t.csv", [TWEET_HEADER] + rows), "AAPL", rejects=rejects)
    assert len(rejects) == 1


@pytest.mark.parametrize("count", ["inf", "1e400", "nan"])
def test_non_finite_count_rejected(tmp_path, count):
    rows = [_row(i) for i in range(20)]
    rows.append("99,u1,2018-06-02T15:00:00Z,$AAPL tweet 99,%s,0,0,AAPL" % count)
    rejects = []
    tweets = load_tweets(_write(tmp_path / "t.csv", [TWEET_HEADER] + rows), "AAPL", rejects=rejects)
    assert len(tweets) == 20
    assert len(rejects) == 1
    assert rejects[0][0] == 21
    assert "likes" in rejects[0][1]


def test_post_filed_under_two_tickers_is_kept_for_both(tmp_path):
    rows = [_row(1), _row(1, ticker="TSLA"), _row(2, ticker="TSLA")]
    path = _write(tmp_path / "t.csv", [TWEET_HEADER] + rows)
    everything = load_tweets(path, None)
    assert sorted((t.id, t.ticker) for t in everything) == [("1", "AAPL"), ("1", "TSLA"), ("2", "TSLA")]
    tsla = [t.id for t in everything if t.ticker == "TSLA"]
    assert tsla == [t.id for t in load_tweets(path, "TSLA")]
    assert sorted(tsla) == ["1", "2"]


def test_reject_rate_above_limit_is_fatal(tmp_path):
    rows = [_row(i) for i in range(8)] + [_row(8, likes=-1), _row(9, likes=-2)]
    with pytest.raises(SchemaError):
        load_tweets(_write(tmp_path / "t.csv", [TWEET_HEADER] + rows), "AAPL")


def test_missing_columns_is_schema_error(tmp_path):
    path = _write(tmp_path / "t.csv", ["id,text", "1,hello"])
    with pytest.raises(SchemaError):
        load_tweets(path, "AAPL")


def test_empty_file_warns(tmp_path, caplog):
    path = tmp_path / "t.csv"
    path.write_text("", encoding="utf-8")
    with caplog.at_level(logging.WARNING, logger="trendlime.ingest"):
        assert load_tweets(path, "AAPL") == []
    assert "empty" in caplog.text


def test_header_only_file_is_empty(tmp_path):
    assert load_tweets(_write(tmp_path / "t.csv", [TWEET_HEADER]), "AAPL") == []


def test_missing_file(tmp_path):
    with pytest.raises(MissingInputError):
        load_tweets(tmp_path / "nope.csv", "AAPL")
    with pytest.raises(MissingInputError):
        load_bars(tmp_path / "nope.csv", "AAPL")


def test_line_json_tweets(tmp_path):
    records = [
        {"id": "7", "author_id": "a", "timestamp": "2018-06-01T12:00:00Z", "text": "hi",
         "likes": 1, "comments": 2, "retweets": 3, "ticker": "aapl"},
        {"id": "8", "author_id": "b", "timestamp": "2018-06-01T11:00:00+02:00", "text": "yo",
         "likes": 0, "comments": 0, "retweets": 0, "ticker": "AAPL"},
    ]
    path = tmp_path / "t.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    tweets = load_tweets(path, "AAPL")
    assert [t.id for t in tweets] == ["8", "7"]
    assert tweets[0].timestamp.hour == 9
    assert tweets[1].retweets == 3


def test_load_bars_sorted(tmp_path):
    rows = [
        "2018-06-05,10,11,9,10.5,100",
        "2018-06-01,10,11,9,10.5,100",
        "2018-06-04,10,11,9,10.5,100",
        "2018-06-02,10,11,9,10.5,100",
        "2018-06-03,10,11,9,10.5,100",
    ]
    bars = load_bars(_write(tmp_path / "b.csv", [BAR_HEADER] + rows), "AAPL")
    assert len(bars) == 5
    assert [b.date.day for b in bars] == [1, 2, 3, 4, 5]
    assert bars[0].volume == 100 and bars[0].ticker == "AAPL"


def test_duplicate_bar_date_is_fatal(tmp_path):
    rows = ["2018-06-01,10,11,9,10.5,100", "2018-06-01,10,11,9,10.5,100"]
    with pytest.raises(DataIntegrityError):
        load_bars(_write(tmp_path / "b.csv", [BAR_HEADER] + rows), "AAPL")


def test_ohlc_sanity_is_fatal(tmp_path):
    with pytest.raises(DataIntegrityError):
        load_bars(_write(tmp_path / "b.csv", [BAR_HEADER, "2018-06-01,100,99,98,98.5,10"]), "AAPL")
    with pytest.raises(DataIntegrityError):
        load_bars(_write(tmp_path / "c.csv", [BAR_HEADER, "2018-06-01,100,101,102,100,10"]), "AAPL")


def test_non_finite_price_is_fatal(tmp_path):
    with pytest.raises(DataIntegrityError):
        load_bars(_write(tmp_path / "b.csv", [BAR_HEADER, "2018-06-01,10,inf,9,10.5,100"]), "AAPL")


def test_bars_with_ticker_column(tmp_path):
    rows = ["2018-06-01,10,11,9,10.5,100,AAPL", "2018-06-01,10,11,9,10.5,100,TSLA"]
    bars = load_bars(_write(tmp_path / "b.csv", [BAR_HEADER + ",ticker"] + rows), "aapl")
    assert len(bars) == 1


def _bars(tmp_path, dates):
    return load_bars(_write(tmp_path / "b.csv", [BAR_HEADER] + ["%s,10,11,9,10.5,100" % d for d in dates]),
                     "AAPL")


def test_window_default_study_range(tmp_path):
    days = [datetime.date(2017, 5, 1), datetime.date(2018, 6, 1), datetime.date(2019, 12, 31),
            datetime.date(2020, 1, 2)]
    tweets = [_tweet(i, d) for i, d in enumerate(days)]
    bars = _bars(tmp_path, [d.isoformat() for d in days])
    config = PipelineConfig()
    start, end = config.window
    corpus = window(tweets, bars, start, end, config)
    assert [t.id for t in corpus.tweets] == ["1", "2"]
    assert [b.date for b in corpus.bars] == days[1:3]
    assert corpus.window == (datetime.date(2018, 6, 1), datetime.date(2019, 12, 31))


def test_window_single_day(tmp_path):
    day = datetime.date(2018, 6, 4)
    bars = _bars(tmp_path, ["2018-06-01", "2018-06-04", "2018-06-05"])
    tweets = [_tweet(1, day), _tweet(2, datetime.date(2018, 6, 5))]
    corpus = window(tweets, bars, day, day)
    assert len(corpus.tweets) == 1 and len(corpus.bars) == 1


def test_window_is_idempotent(tmp_path):
    bars = _bars(tmp_path, ["2018-06-01", "2018-06-04", "2018-06-05"])
    tweets = [_tweet(i, datetime.date(2018, 6, 1 + i)) for i in range(5)]
    start, end = datetime.date(2018, 6, 2), datetime.date(2018, 6, 4)
    once = window(tweets, bars, start, end)
    twice = window(list(once.tweets), list(once.bars), start, end)
    assert once == twice


def test_window_without_bars_is_fatal(tmp_path):
    bars = _bars(tmp_path, ["2018-06-01"])
    tweets = [_tweet(1, datetime.date(2018, 7, 2))]
    with pytest.raises(EmptyWindowError) as info:
        window(tweets, bars, datetime.date(2018, 7, 1), datetime.date(2018, 7, 31))
    assert info.value.counts["bars_kept"] == 0
    assert info.value.counts["tweets_kept"] == 1


def test_filter_engagement_boundary():
    day = datetime.date(2018, 6, 1)
    kept = _tweet(1, day, 20, 10, 10)
    dropped = _tweet(2, day, 20, 10, 9)
    assert filter_engagement([kept, dropped], 40) == [kept]


def test_filter_engagement_zero_is_identity_and_idempotent():
    day = datetime.date(2018, 6, 1)
    tweets = [_tweet(i, day, i, 0, i) for i in range(40)]
    assert filter_engagement(tweets, 0) == tweets
    once = filter_engagement(tweets, 40)
    assert filter_engagement(once, 40) == once
    assert [t.id for t in once] == [str(i) for i in range(20, 40)]
