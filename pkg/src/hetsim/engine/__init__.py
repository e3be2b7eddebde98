"""Experiment runner, configuration and command line."""
from .cdf import emit_cdf
from .config import REGISTRY, ExperimentConfig, parse_config, parse_config_text
from .presets import PRESETS, get_preset
from .runner import KpiReport, run_experiment

__all__ = ["emit_cdf", "REGISTRY", "ExperimentConfig", "parse_config", "parse_config_text", "PRESETS",
           "get_preset", "KpiReport", "run_experiment"]
