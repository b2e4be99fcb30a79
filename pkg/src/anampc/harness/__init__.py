"""Configuration, pipeline, experiments, Monte Carlo, plots and the CLI."""
from .config import ConfigError, ExperimentConfig, load, loads, parse_si, reference_config
from .experiments import run_line_step, run_load_step, worst_case_load_step
from .metrics import MetricsReport, RunMetrics, aggregate, transient_metrics
from .montecarlo import McResult, McRun, draw_parameters, monte_carlo
from .pipeline import PipelineError, PipelineResult, build_controller, run_pipeline
from .plots import emit_plots, empty_plot, ensemble_plot, histogram, line_plot

__all__ = [
    "ConfigError", "ExperimentConfig", "load", "loads", "parse_si", "reference_config", "run_line_step",
    "run_load_step", "worst_case_load_step", "MetricsReport", "RunMetrics", "aggregate",
    "transient_metrics", "McResult", "McRun", "draw_parameters", "monte_carlo", "PipelineError",
    "PipelineResult", "build_controller", "run_pipeline", "emit_plots", "empty_plot",
    "ensemble_plot", "histogram", "line_plot",
]
