# -*- coding: utf-8 -*-
"""
Los tres índices de sentimiento por tweet: AFINN, VADER compound y la
polaridad discreta {-1, 0, +1}.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from types import MappingProxyType

import afinn
from vaderSentiment.vaderSentiment import SentimentIntensityAnalyzer

from .config import PipelineConfig
from .errors import MissingInputError
from .textprep import load_stopwords, tokenize

logger = logging.getLogger(__name__)

# Word lists shipped with the afinn distribution, preferred first.
AFINN_FILES = ('AFINN-111.txt', 'AFINN-en-165.txt')


def default_afinn_path():
    """Full English AFINN list from the installed afinn package."""
    data = Path(afinn.__file__).resolve().parent / 'data'
    for name in AFINN_FILES:
        if (data / name).is_file():
            return data / name
    raise MissingInputError('no AFINN word list under %s (looked for %s)' % (data, ', '.join(AFINN_FILES)))


@dataclass(frozen=True)
class SentimentScores:
    afinn: int
    vader: float
    polarity: int


@lru_cache(maxsize=8)
def load_afinn(path=None):
    """Read a ``word<TAB>valence`` lexicon into a read-only mapping."""
    path = Path(path) if path else default_afinn_path()
    lexicon = {}
    for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        if not line.strip() or line.startswith('#'):
            continue
        word, _, value = line.rpartition('\t')
        if not word:
            logger.warning('%s:%d: no tab separator, line skipped', path, number)
            continue
        lexicon[word.strip().lower()] = int(value)
    return MappingProxyType(lexicon)


def afinn_score(tokens, lexicon=None):
    """
    Sum of lexicon valences over unstemmed tokens; unknown words count 0.

    >>> afinn_score(['good', 'stock', 'bad'], {'good': 3, 'bad': -3})
    0
    """
    if lexicon is None:
        lexicon = load_afinn()
    return sum(lexicon.get(token, 0) for token in tokens)


@lru_cache(maxsize=4)
def _analyzer(lexicon_path=None):
    if lexicon_path:
        return SentimentIntensityAnalyzer(lexicon_file=str(Path(lexicon_path).resolve()))
    return SentimentIntensityAnalyzer()


def vader_score(raw_text, lexicon_path=None):
    """VADER compound on the raw text, which keeps casing and punctuation."""
    if not raw_text or not raw_text.strip():
        return 0.0
    compound = _analyzer(lexicon_path).polarity_scores(raw_text)['compound']
    return float(min(1.0, max(-1.0, compound)))


def polarity(vader, pos_threshold=0.05, neg_threshold=0.05):
    """
    >>> polarity(0.05), polarity(0.0), polarity(-0.5)
    (1, 0, -1)
    """
    if vader >= pos_threshold:
        return 1
    if vader <= -neg_threshold:
        return -1
    return 0


def score_text(raw_text, config=None, stopwords=None):
    # type: (str, PipelineConfig, frozenset) -> SentimentScores
    config = config or PipelineConfig()
    if stopwords is None and config.stopwords_path:
        stopwords = load_stopwords(config.stopwords_path)
    tokens = tokenize(raw_text, stopwords)
    vader = vader_score(raw_text, config.vader_lexicon_path)
    return SentimentScores(
        afinn=afinn_score(tokens, load_afinn(config.afinn_path)),
        vader=vader,
        polarity=polarity(vader, config.pos_threshold, config.neg_threshold),
    )
