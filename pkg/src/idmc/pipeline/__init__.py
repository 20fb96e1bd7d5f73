"""Experiment orchestration: config, datasets, training phases and sweeps."""
from .config import ExperimentConfig, load_config, parse_config
from .data import Dataset, load_dataset
from .run import (
    ExperimentResult,
    TrainResult,
    evaluate_sweep,
    run_experiment,
    run_phase1_analog,
    run_phase2_cluster,
    run_phase3_finetune,
    run_ste_baseline,
)

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "ExperimentResult",
    "TrainResult",
    "evaluate_sweep",
    "load_config",
    "load_dataset",
    "parse_config",
    "run_experiment",
    "run_phase1_analog",
    "run_phase2_cluster",
    "run_phase3_finetune",
    "run_ste_baseline",
]
