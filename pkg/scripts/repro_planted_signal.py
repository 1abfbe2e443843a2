import json
import sys
import tempfile
from pathlib import Path

# Ensure we import the repo-local trendlime (not a pip-installed one).
ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from trendlime import ExperimentConfig, PipelineConfig, run_experiment  # noqa: E402
from trendlime.fixture import generate_fixture  # noqa: E402


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    with tempfile.TemporaryDirectory() as tmp:
        manifest = generate_fixture(seed, 400, Path(tmp))
        config = ExperimentConfig(
            data_dir=tmp,
            tickers=("AAPL",),
            feature_sets=("proposed", "price_only"),
            archs=("cnn",),
            seed=seed,
            pipeline=PipelineConfig(study_start=manifest["start"], study_end=manifest["end"]),
        )
        report = run_experiment(config)

    for fs in config.feature_sets:
        cell = report.cell("AAPL", fs, "cnn")
        print(f"{fs}: test {cell.mean('test'):.2f} (bayes {100 * manifest['bayes_accuracy']:.0f})")
    for explanation in report.explanations:
        print("features:", json.dumps(explanation.feature_table.ranked()[:3]))
        print("times:", json.dumps(explanation.time_table.ranked()[:3]))


if __name__ == "__main__":
    main()
