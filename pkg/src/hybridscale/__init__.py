"""Hybrid elasticity control for cloud applications.

Proactive infrastructure scaling from workload forecasts, responsive
software (brownout) scaling, and reactive threshold-based infrastructure
scaling, with a trace-driven simulator to evaluate them together.
"""

from .catalog import Allocation, InstanceCatalog, InstanceType, allocation_stats, default_catalog, load_catalog
from .coordinator import DEFAULT_CONFIG, Controller, validate_and_build
from .dco import DcoSolution, solve_scale_in, solve_scale_out
from .forecast import Estimator, make_forecaster, predict, rmse, rolling_evaluate
from .sim import SimReport, run, serve_second
from .trace import SyntheticProfile, TimeSeries, Window, bin_max, generate_synthetic, ingest_counts

__version__ = "0.1.0"

__all__ = [
    "Allocation", "InstanceCatalog", "InstanceType", "allocation_stats", "default_catalog", "load_catalog",
    "DEFAULT_CONFIG", "Controller", "validate_and_build",
    "DcoSolution", "solve_scale_in", "solve_scale_out",
    "Estimator", "make_forecaster", "predict", "rmse", "rolling_evaluate",
    "SimReport", "run", "serve_second",
    "SyntheticProfile", "TimeSeries", "Window", "bin_max", "generate_synthetic", "ingest_counts",
]
