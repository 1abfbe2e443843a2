import datetime
import doctest
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

import trendlime
from trendlime import ModelConfig, PipelineConfig
from trendlime import featurize, sentiment, textprep

doctest.testmod(trendlime, verbose=True)
for _module in (textprep, sentiment, featurize):
    doctest.testmod(_module)

# Additional regression checks (basic asserts)
def _assert_close(actual, expected, tol=1e-9):
    assert abs(actual - expected) <= tol, "Expected %r to be within %g of %r" % (actual, tol, expected)


def run_regressions():
    # Tokens never contain stopwords, urls or mentions.
    out = trendlime.tokenize(u'The stock is up https://t.co/abc @someone #AAPL $AAPL')
    assert u'the' not in out and not any(t.startswith(u'http') for t in out), out
    assert u'someone' not in out and u'aapl' in out, out

    # Sentiment scores stay in their ranges.
    scores = trendlime.score_text(u'great great great terrible')
    assert -1.0 <= scores.vader <= 1.0
    assert scores.polarity in (-1, 0, 1)

    # Buckets start at the 16:00 close.
    stamp = pd.Timestamp('2019-06-03 16:00', tz='US/Eastern')
    assert featurize.row_index(stamp, 'US/Eastern') == 0
    assert featurize.row_index(stamp - pd.Timedelta(minutes=1), 'US/Eastern') == 11

    # Price block replicates one bar on every row.
    bar = trendlime.PriceBar(datetime.date(2019, 6, 3), 100.0, 110.0, 95.0, 105.0, 1e6, 'AAPL')
    block = trendlime.price_matrix(bar, (1, 0, 1))
    assert block.shape == (12, 8)
    assert np.all(block == block[0])

    # Splits keep order and sizes.
    train, val, test = trendlime.split_chronological(list(range(50)))
    assert (len(train), len(val), len(test)) == (35, 5, 10)
    assert train[-1] < val[0] < test[0]

    # End to end on a short synthetic corpus.
    with tempfile.TemporaryDirectory() as tmp:
        manifest = trendlime.generate_fixture(0, 30, Path(tmp))
        config = trendlime.ExperimentConfig(
            data_dir=tmp,
            tickers=('AAPL',),
            feature_sets=('price_only',),
            archs=('cnn',),
            repeats=1,
            explain=False,
            pipeline=PipelineConfig(study_start=manifest['start'], study_end=manifest['end']),
            model=ModelConfig(epochs=2, grid=(0.0,), channels=(2, 3), dense_hidden=4),
        )
        report = trendlime.run_experiment(config)
        assert not report.failed_cells, report.failed_cells
        cell = report.cell('AAPL', 'price_only', 'cnn')
        assert 0.0 <= cell.mean('test') <= 100.0

    _assert_close(trendlime.polarity(0.05), 1)
    _assert_close(trendlime.polarity(0.0), 0)


if __name__ == "__main__":
    run_regressions()
    print("OK")
