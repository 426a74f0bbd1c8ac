"""Reader for the experiment metrics CSV consumed by plotting code."""

import csv

METRICS_COLUMNS = (
    "experiment_id", "curve_kind", "d", "n", "rep", "sigma_zeta", "sigma_gamma", "l", "j", "m",
    "mse", "rel_mse", "center_err", "vec_err", "h_mean", "misclass2", "fit_ms", "pred_ms", "failed",
)

_INT_COLUMNS = {"d", "n", "rep", "l", "j", "m"}
_STR_COLUMNS = {"experiment_id", "curve_kind"}


def _convert(column, text):
    if column in _STR_COLUMNS:
        return text
    if column in _INT_COLUMNS:
        return int(text)
    if column == "failed":
        if text not in ("0", "1"):
            raise ValueError(f"failed must be 0 or 1, got {text!r}")
        return text == "1"
    return float(text)


def read_metrics_csv(path):
    """Parse a metrics CSV into a list of dicts; the header must match exactly."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != METRICS_COLUMNS:
            raise ValueError(f"{path}: header does not match the metrics schema")
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(METRICS_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(METRICS_COLUMNS)} fields, got {len(record)}")
            rows.append({c: _convert(c, v) for c, v in zip(METRICS_COLUMNS, record)})
        return rows
