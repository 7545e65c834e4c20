"""Experiment harness: declarative configs, sweep orchestration, CLI."""

from .config import ExperimentSpec, load_spec
from .runner import ResultRow, run_experiment

__all__ = ["ExperimentSpec", "load_spec", "ResultRow", "run_experiment"]
