"""Per-cell prediction sets: lower/upper bound tensors from a quantile field.

RES bounds: prediction +- q. STD bounds: mean +- q * max(sigma, sigma_floor),
where the floor is the one recorded at calibration time inside the
QuantileField (mixing floors would change the score definition between
calibration and prediction and break exchangeability). Infinite quantiles
propagate to (-inf, +inf) bounds: a vacuous set is reported honestly rather
than clipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibrate import QuantileField
from .container import dump_sidecar, load_sidecar, read_array, write_array
from .grid import FieldTensor, GridSpec

__all__ = [
    "IntervalField",
    "intervals_res",
    "intervals_std",
    "interval_width",
    "write_interval_field",
    "read_interval_field",
]


@dataclass(frozen=True)
class IntervalField:
    """Cellwise prediction set [lower, upper] at miscoverage alpha."""

    spec: GridSpec
    alpha: float
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != self.spec.shape or hi.shape != self.spec.shape:
            raise ValueError("bound shapes must match the GridSpec")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("bounds must not contain NaN")
        if (lo > hi).any():
            raise ValueError("lower must be <= upper at every cell")
        for name, arr in (("lower", lo), ("upper", hi)):
            view = arr.view()
            view.setflags(write=False)
            object.__setattr__(self, name, view)


def _check_match(a: GridSpec, b: GridSpec, what: str) -> None:
    if a != b:
        raise ValueError(f"GridSpec mismatch between {what}")


def intervals_res(prediction: FieldTensor, q: QuantileField) -> IntervalField:
    """Prediction set {prediction - q, prediction + q} for RES quantiles."""
    _check_match(prediction.spec, q.spec, "prediction and quantiles")
    if q.strategy.tag != "RES":
        raise ValueError(f"quantile strategy is {q.strategy.tag}, expected RES")
    return IntervalField(q.spec, q.alpha, prediction.data - q.q, prediction.data + q.q)


def intervals_std(mean: FieldTensor, sigma: FieldTensor, q: QuantileField) -> IntervalField:
    """Prediction set {mean - q*sigma', mean + q*sigma'}, sigma' floored."""
    _check_match(mean.spec, q.spec, "mean and quantiles")
    _check_match(sigma.spec, q.spec, "sigma and quantiles")
    if q.strategy.tag != "STD":
        raise ValueError(f"quantile strategy is {q.strategy.tag}, expected STD")
    if (sigma.data < 0).any():
        raise ValueError("sigma contains negative entries")
    # inf * 0 would be NaN when sigma_floor == 0; an infinite rank always
    # means a vacuous set.
    if q.is_infinite:
        half = np.full(q.spec.shape, np.inf)
    else:
        half = q.q * np.maximum(sigma.data, q.strategy.sigma_floor)
    return IntervalField(q.spec, q.alpha, mean.data - half, mean.data + half)


def interval_width(iv: IntervalField) -> np.ndarray:
    """upper - lower per cell (2q for RES, 2q*sigma' for STD)."""
    return iv.upper - iv.lower


def write_interval_field(iv: IntervalField, stem) -> None:
    """Persist as ``<stem>.lower.cpt`` and ``<stem>.upper.cpt`` with one shared
    ``<stem>.json`` sidecar."""
    stem = Path(stem)
    meta = iv.spec.to_sidecar()
    meta["alpha"] = iv.alpha
    write_array(iv.lower, stem.with_name(stem.name + ".lower.cpt"), meta=None)
    write_array(iv.upper, stem.with_name(stem.name + ".upper.cpt"), meta=None)
    dump_sidecar(meta, stem.with_name(stem.name + ".json"))


def read_interval_field(stem) -> IntervalField:
    stem = Path(stem)
    meta = load_sidecar(stem.with_name(stem.name + ".json"))
    spec = GridSpec.from_sidecar(meta)
    lower, _ = read_array(
        stem.with_name(stem.name + ".lower.cpt"), allow_infinite=True, require_sidecar=False
    )
    upper, _ = read_array(
        stem.with_name(stem.name + ".upper.cpt"), allow_infinite=True, require_sidecar=False
    )
    return IntervalField(spec, float(meta["alpha"]), lower, upper)
