"""Per-cell conformal prediction intervals for spatio-temporal forecast tensors.

Pipeline: score a calibration set (RES or STD), estimate per-cell conformal
quantiles, attach lower/upper bounds to new forecasts, and evaluate empirical
coverage and interval width. A synthetic AR(1) Gaussian-field generator with
an exact error law serves as the validation oracle.
"""

__version__ = "0.1.0"

from .grid import CalibrationSet, FieldTensor, GridSpec, cell_index
from .container import read_container, write_container
from .scores import ScoreSet, ScoreStrategy, score_res, score_std
from .calibrate import (
    QuantileField,
    calibrate_quantiles,
    calibrate_sweep,
    conformal_rank,
    read_quantile_field,
    write_quantile_field,
)
from .intervals import (
    IntervalField,
    interval_width,
    intervals_res,
    intervals_std,
    read_interval_field,
    write_interval_field,
)
from .evaluate import (
    CoverageReport,
    coverage_curve,
    empirical_coverage,
    mean_width,
    uncalibrated_gaussian_intervals,
)
from .normal import central_z, inv_norm_cdf, norm_cdf
from .synth import SynthConfig, generate_pair, generate_samples, true_quantile, true_sigma

__all__ = [
    "__version__",
    "GridSpec",
    "FieldTensor",
    "CalibrationSet",
    "cell_index",
    "read_container",
    "write_container",
    "ScoreStrategy",
    "ScoreSet",
    "score_res",
    "score_std",
    "QuantileField",
    "conformal_rank",
    "calibrate_quantiles",
    "calibrate_sweep",
    "read_quantile_field",
    "write_quantile_field",
    "IntervalField",
    "intervals_res",
    "intervals_std",
    "interval_width",
    "read_interval_field",
    "write_interval_field",
    "CoverageReport",
    "empirical_coverage",
    "coverage_curve",
    "mean_width",
    "uncalibrated_gaussian_intervals",
    "norm_cdf",
    "inv_norm_cdf",
    "central_z",
    "SynthConfig",
    "generate_pair",
    "generate_samples",
    "true_sigma",
    "true_quantile",
]
