"""Training loop, evaluation protocol, metrics, and the command line."""

from .config import ConfigError, RunConfig, load_config, parse_config
from .train import TrainingDiverged, train
from .evaluate import build_learner, evaluate, load_for_eval
from .heatmap import heatmap_counts, write_heatmap_csv

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "TrainingDiverged",
    "train",
    "evaluate",
    "build_learner",
    "load_for_eval",
    "heatmap_counts",
    "write_heatmap_csv",
]
