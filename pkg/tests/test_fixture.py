from __future__ import annotations

import json

import pytest

from trendlime import PipelineConfig
from trendlime.errors import ConfigError
from trendlime.featurize import build_instances, total_engagement
from trendlime.fixture import generate_fixture
from trendlime.ingest import load_bars, load_tweets, window


def test_same_seed_same_bytes(tmp_path):
    a = generate_fixture(7, 30, tmp_path / "a")
    b = generate_fixture(7, 30, tmp_path / "b")
    for name in ("tweets.csv", "AAPL.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a["planted_days"] == b["planted_days"]
    c = generate_fixture(8, 30, tmp_path / "c")
    assert (tmp_path / "c" / "tweets.csv").read_bytes() != (tmp_path / "a" / "tweets.csv").read_bytes()
    assert c["seed"] == 8


def test_manifest(tmp_path):
    manifest = generate_fixture(1, 400, tmp_path)
    assert manifest["bayes_accuracy"] == pytest.approx(0.7)
    assert 150 <= len(manifest["planted_days"]) <= 250
    on_disk = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert on_disk["planted_days"] == manifest["planted_days"]
    config = json.loads((tmp_path / "config.json").read_text(encoding="utf-8"))
    assert config["experiment"]["tickers"] == ["AAPL"]


def test_too_few_days(tmp_path):
    with pytest.raises(ConfigError):
        generate_fixture(0, 9, tmp_path)


def test_fixture_loads_cleanly_and_carries_the_signal(tmp_path):
    manifest = generate_fixture(2, 60, tmp_path)
    rejects = []
    tweets = load_tweets(tmp_path / "tweets.csv", "AAPL", rejects=rejects)
    bars = load_bars(tmp_path / "AAPL.csv", "AAPL")
    assert rejects == []
    assert len(tweets) == manifest["n_tweets"]
    assert len(bars) == 60
    assert any(total_engagement(t) < 40 for t in tweets)

    config = PipelineConfig(study_start=manifest["start"], study_end=manifest["end"])
    corpus = window(tweets, bars, *config.window, config)
    instances = build_instances(corpus, tweets, "proposed", config)
    planted = set(manifest["planted_days"])
    burst = [inst.values[2, 7] for inst in instances if inst.day.isoformat() in planted]
    quiet = [inst.values[2, 7] for inst in instances if inst.day.isoformat() not in planted]
    assert burst and quiet
    assert min(burst) > max(quiet)
