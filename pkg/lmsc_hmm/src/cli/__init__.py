from .config import ExperimentConfig, from_settings, load_experiment_config
from .experiments import (ExperimentResult, run_baseline, run_curve_fit,
                          run_experiment, run_fit_bw, run_pipeline,
                          run_simulate, run_sweep)
from .outputs import emit_outputs, format_table, load_report, result_frame

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "emit_outputs",
    "format_table",
    "from_settings",
    "load_experiment_config",
    "load_report",
    "result_frame",
    "run_baseline",
    "run_curve_fit",
    "run_experiment",
    "run_fit_bw",
    "run_pipeline",
    "run_simulate",
    "run_sweep",
]
