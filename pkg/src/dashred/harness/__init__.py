from .config import Config, ConfigError
from .experiment import (PIPELINE_DEFAULTS, RunResult, build_context,
                         effective_config, run_experiment, sim_tendency_fn,
                         stage_seeds, worker_count)
from .metrics import MetricsSeries, compute_rmse, rmse_series
from .verify import SUITES, run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
