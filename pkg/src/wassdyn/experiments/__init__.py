"""Config-driven experiments: configs, validation suites, runners and reports."""

from wassdyn.experiments.config import ExperimentConfig, load_config
from wassdyn.experiments.report import Criterion, ExperimentReport, Verdict, load_report, write_report
from wassdyn.experiments.runners import RUNNERS, run_experiment

__all__ = [
    "RUNNERS",
    "Criterion",
    "ExperimentConfig",
    "ExperimentReport",
    "Verdict",
    "load_config",
    "load_report",
    "run_experiment",
    "write_report",
]
