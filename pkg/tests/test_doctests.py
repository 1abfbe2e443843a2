from __future__ import annotations

import doctest

import pytest

import trendlime
from trendlime import experiment, featurize, sentiment, textprep


@pytest.mark.parametrize("module", [trendlime, textprep, sentiment, featurize, experiment])
def test_doctests(module):
    # Keep parity with the `python test.py` runner.
    res = doctest.testmod(module, verbose=False)
    assert res.failed == 0
