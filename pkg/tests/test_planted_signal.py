from __future__ import annotations

import pytest

from trendlime.config import ExperimentConfig, PipelineConfig
from trendlime.experiment import run_experiment
from trendlime.fixture import generate_fixture


@pytest.mark.slow
def test_planted_volume_signal_end_to_end(tmp_path):
    manifest = generate_fixture(0, 400, tmp_path)
    config = ExperimentConfig(
        data_dir=str(tmp_path),
        tickers=("AAPL",),
        feature_sets=("proposed", "price_only"),
        archs=("cnn",),
        pipeline=PipelineConfig(study_start=manifest["start"], study_end=manifest["end"]),
    )
    report = run_experiment(config)
    assert not report.failed_cells

    proposed = report.cell("AAPL", "proposed", "cnn")
    price_only = report.cell("AAPL", "price_only", "cnn")
    assert len(proposed.test_acc) == 10
    assert proposed.mean("test") >= 62.0
    assert price_only.mean("test") <= 56.0

    (explanation,) = report.explanations
    assert explanation.feature_table.ranked()[0][0] == "tweet_volume"
    assert explanation.time_table.ranked()[0][0] == "20-22"
