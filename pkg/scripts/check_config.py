import sys

from trendlime.config import ExperimentConfig, load_config

config = load_config(sys.argv[1]) if len(sys.argv) > 1 else ExperimentConfig()
print(f"tickers: {config.tickers}")
print(f"feature_sets: {config.feature_sets}")
print(f"archs: {config.archs}")
print(f"window: {config.pipeline.window} ({config.pipeline.window_end})")
print(f"grid: {config.model.grid}")
print(f"conv_blocks: {config.model.conv_blocks}")
print(f"lime: {config.lime.as_dict()}")
print(f"tweets: {config.resolve_tweets_path()}")
