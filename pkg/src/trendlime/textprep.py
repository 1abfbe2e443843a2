# -*- coding: utf-8 -*-
"""
Normalización de texto de tweets: markup fuera, minúsculas, tokens,
sin puntuación ni stopwords, stem de Porter.
"""
from functools import lru_cache
from pathlib import Path

import html5lib
from nltk.stem.porter import PorterStemmer

from .config import DATA_DIR, _mention_re, _strip_re, _url_re, _edge_punct_re

DEFAULT_STOPWORDS = DATA_DIR / 'stopwords_en.txt'

_stemmer = PorterStemmer()


@lru_cache(maxsize=8)
def load_stopwords(path=None):
    """One word per line, UTF-8. Blank lines and ``#`` comments are ignored."""
    path = Path(path) if path else DEFAULT_STOPWORDS
    words = set()
    for line in path.read_text(encoding='utf-8').splitlines():
        line = line.strip().lower()
        if line and not line.startswith('#'):
            words.add(line)
    return frozenset(words)


def strip_markup(text):
    """
    Scraped tweets carry entities (``&amp;``) and sometimes anchors.
    Parse as an HTML fragment and keep only the text nodes.
    """
    if '<' not in text and '&' not in text:
        return text
    builder = html5lib.getTreeBuilder('etree')
    parser = html5lib.HTMLParser(tree=builder)
    tree = parser.parseFragment(text)
    return u''.join(tree.itertext())


@lru_cache(maxsize=65536)
def stem(word):
    return _stemmer.stem(word)


def _chunk_token(chunk, stopwords):
    if _url_re.match(chunk) or _mention_re.match(chunk):
        return None
    trimmed = _edge_punct_re.sub(u'', chunk)
    if trimmed in stopwords:
        return None
    # Inner punctuation is joined: "don't" -> "dont", "$aapl" -> "aapl".
    token = _strip_re.sub(u'', chunk)
    if not token or token in stopwords:
        return None
    return token


def tokenize(text, stopwords=None):
    """
    Lowercase, whitespace/punctuation tokenization and stopword removal,
    without stemming. This is the stream lexicon scorers look up.

    >>> tokenize(u'Apple is GREAT!!! https://t.co/x @bob #win', {u'is'})
    ['apple', 'great', 'win']
    """
    if stopwords is None:
        stopwords = load_stopwords()
    tokens = []
    for chunk in strip_markup(text or u'').lower().split():
        token = _chunk_token(chunk, stopwords)
        if token is not None:
            tokens.append(token)
    return tokens


def normalize(text, stopwords=None):
    """
    >>> normalize(u'Apple is GREAT!!!', {u'is'})
    ['appl', 'great']
    """
    if stopwords is None:
        stopwords = load_stopwords()
    out = []
    for token in tokenize(text, stopwords):
        stemmed = stem(token)
        if stemmed and stemmed not in stopwords:
            out.append(stemmed)
    return out
