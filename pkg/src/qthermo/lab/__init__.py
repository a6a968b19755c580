from .config import ConfigError, ExperimentConfig, load_config
from .runner import RunManifest, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "RunManifest", "load_config", "run_experiment"]
