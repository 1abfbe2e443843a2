from __future__ import annotations

import pytest

from trendlime import PipelineConfig
from trendlime.errors import ConfigError
from trendlime.sentiment import afinn_score, load_afinn, polarity, score_text, vader_score
from trendlime.textprep import tokenize


def test_afinn_lookup():
    assert afinn_score(["good"]) == 3
    assert afinn_score([]) == 0
    assert afinn_score(["good", "bad", "stock"]) == 0


def test_afinn_is_additive_over_concatenation():
    a = tokenize("great earnings, strong growth")
    b = tokenize("terrible guidance and a crash")
    assert afinn_score(a + b) == afinn_score(a) + afinn_score(b)


def test_default_afinn_is_the_full_word_list():
    lexicon = load_afinn()
    assert len(lexicon) > 2000
    for word in ("awful", "useless", "fraud"):
        assert lexicon[word] < 0, word
    for word in ("outstanding", "thrilled", "win"):
        assert lexicon[word] > 0, word
    assert afinn_score(tokenize("an awful, useless quarter")) < 0


def test_afinn_custom_lexicon(tmp_path):
    path = tmp_path / "lex.txt"
    path.write_text("moon\t5\nrug pull\t-4\n# comment\n", encoding="utf-8")
    lexicon = load_afinn(str(path))
    assert lexicon["moon"] == 5
    assert afinn_score(["moon", "moon"], lexicon) == 10


def test_vader_empty_and_bounds():
    assert vader_score("") == 0.0
    assert vader_score("   ") == 0.0
    for text in ("AWFUL!!! worst crash ever :(", "BEST DAY EVER!!! love it :)", "$AAPL 12"):
        assert -1.0 <= vader_score(text) <= 1.0


def test_vader_keeps_emphasis():
    assert vader_score("good") < vader_score("GREAT!!")


def test_vader_ignores_leading_article():
    assert vader_score("the stock looks good") == vader_score("stock looks good")


def test_polarity_boundaries():
    assert polarity(0.05) == 1
    assert polarity(0.049) == 0
    assert polarity(0.0) == 0
    assert polarity(-0.049) == 0
    assert polarity(-0.05) == -1


def test_polarity_is_monotone():
    values = [i / 100.0 for i in range(-100, 101)]
    labels = [polarity(v) for v in values]
    assert labels == sorted(labels)


def test_score_text():
    scores = score_text("Great quarter, strong growth!")
    assert scores.afinn == afinn_score(tokenize("Great quarter, strong growth!"))
    assert scores.afinn > 0
    assert scores.vader > 0.05
    assert scores.polarity == 1
    neutral = score_text("")
    assert (neutral.afinn, neutral.vader, neutral.polarity) == (0, 0.0, 0)


def test_threshold_config_is_validated():
    with pytest.raises(ConfigError):
        PipelineConfig(pos_threshold=0)
    strict = PipelineConfig(pos_threshold=0.99)
    assert score_text("good", strict).polarity == 0
