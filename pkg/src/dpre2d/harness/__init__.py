"""Config-driven experiment runner and command-line entry point."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .runner import RunFailure, RunManifest, run, sweep

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config_text",
           "RunFailure", "RunManifest", "run", "sweep"]
