"""Single-index regression along a curve."""

from ._core import (
    METRICS_HEADER,
    Estimator,
    Model,
    Selection,
    SvrError,
    curve_info,
    fit_rate,
    run_experiment,
    tune,
    write_experiment_csv,
)
from .metrics import METRICS_COLUMNS, read_metrics_csv

__all__ = [
    "METRICS_COLUMNS",
    "METRICS_HEADER",
    "Estimator",
    "Model",
    "Selection",
    "SvrError",
    "curve_info",
    "fit_rate",
    "read_metrics_csv",
    "run_experiment",
    "tune",
    "write_experiment_csv",
]
