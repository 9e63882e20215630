"""Per-cell conformal quantile estimation.

The conformal quantile at miscoverage alpha is the k-th smallest of the n
calibration scores at each cell, k = ceil((n+1)(1-alpha)), the finite-sample
corrected rank of split conformal prediction. When k > n the requested
coverage is unattainable with n samples and the quantile is +infinity (the
prediction set degenerates to the whole line rather than silently truncating
to the max score).

Selection is an exact order statistic via introselect (np.partition); sketch
or streaming quantile estimators are deliberately not used, so results are
bitwise equal to a full sort.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .container import read_array, write_array
from .grid import GridSpec
from .scores import ScoreSet, ScoreStrategy

__all__ = [
    "InfiniteQuantileWarning",
    "QuantileField",
    "conformal_rank",
    "min_samples_for",
    "calibrate_quantiles",
    "calibrate_sweep",
    "write_quantile_field",
    "read_quantile_field",
]


class InfiniteQuantileWarning(UserWarning):
    """n is too small for the requested coverage; quantiles are +infinity."""


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def conformal_rank(n: int, alpha: float) -> int | float:
    """1-indexed order-statistic rank k = ceil((n+1)(1-alpha)), or math.inf.

    Returns math.inf when k would exceed n, i.e. when n < (1-alpha)/alpha.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    alpha = _check_alpha(alpha)
    k = math.ceil((n + 1) * (1.0 - alpha))
    return k if k <= n else math.inf


def min_samples_for(alpha: float) -> int:
    """Smallest n with a finite conformal rank: ceil((1-alpha)/alpha)."""
    alpha = _check_alpha(alpha)
    return math.ceil((1.0 - alpha) / alpha)


@dataclass(frozen=True)
class QuantileField:
    """Per-cell conformal quantile q for one alpha, plus calibration provenance.

    ``q`` has shape (t_out, nx, ny, nvar); entries are finite and >= 0 when
    the rank is finite, and +infinity everywhere otherwise.
    """

    spec: GridSpec
    alpha: float
    n: int
    q: np.ndarray
    strategy: ScoreStrategy

    def __post_init__(self):
        arr = np.asarray(self.q, dtype=np.float64)
        if arr.shape != self.spec.shape:
            raise ValueError(f"q shape {arr.shape} does not match spec {self.spec.shape}")
        _check_alpha(self.alpha)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if np.isnan(arr).any() or (arr < 0).any():
            raise ValueError("q entries must be >= 0 or +inf")
        infinite_rank = conformal_rank(self.n, self.alpha) is math.inf
        if infinite_rank != bool(np.isinf(arr).all()) or (
            not infinite_rank and np.isinf(arr).any()
        ):
            raise ValueError(
                "q must be +inf exactly when ceil((n+1)(1-alpha)) > n"
            )
        view = arr.view()
        view.setflags(write=False)
        object.__setattr__(self, "q", view)

    @property
    def is_infinite(self) -> bool:
        return bool(np.isinf(self.q).all())


def calibrate_quantiles(scores: ScoreSet, alpha: float, workers: int = 1) -> QuantileField:
    """k-th smallest score per cell, k = conformal_rank(n, alpha).

    ``workers`` > 1 partitions the cell space across threads; the result is
    deterministic and identical to the single-threaded one.
    """
    alpha = _check_alpha(alpha)
    n = scores.n
    k = conformal_rank(n, alpha)
    if k is math.inf:
        warnings.warn(
            f"infinite quantiles (n={n} < required {min_samples_for(alpha)})",
            InfiniteQuantileWarning,
            stacklevel=2,
        )
        q = np.full(scores.spec.shape, np.inf)
        return QuantileField(scores.spec, alpha, n, q, scores.strategy)

    flat = scores.scores.reshape(n, -1)
    out = np.empty(flat.shape[1], dtype=np.float64)

    def select(lo: int, hi: int) -> None:
        out[lo:hi] = np.partition(flat[:, lo:hi], k - 1, axis=0)[k - 1]

    if workers <= 1:
        select(0, flat.shape[1])
    else:
        bounds = np.linspace(0, flat.shape[1], workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(select, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for f in futures:
                f.result()
    return QuantileField(scores.spec, alpha, n, out.reshape(scores.spec.shape), scores.strategy)


def calibrate_sweep(scores: ScoreSet, alphas, workers: int = 1) -> list[QuantileField]:
    """One QuantileField per alpha; alphas must be strictly increasing."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alphas must be non-empty")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    return [calibrate_quantiles(scores, a, workers=workers) for a in alphas]


def write_quantile_field(qf: QuantileField, path) -> None:
    """Persist as CPTF (+inf kept as IEEE infinity) with provenance sidecar."""
    meta = qf.spec.to_sidecar()
    meta.update(
        alpha=qf.alpha,
        n=qf.n,
        strategy=qf.strategy.tag,
        sigma_floor=qf.strategy.sigma_floor,
    )
    write_array(qf.q, path, meta)


def read_quantile_field(path) -> QuantileField:
    arr, meta = read_array(path, allow_infinite=True)
    if (arr == -np.inf).any():
        raise ValueError(f"{path}: quantile field contains -inf")
    spec = GridSpec.from_sidecar(meta)
    strategy = ScoreStrategy(str(meta["strategy"]), float(meta["sigma_floor"]))
    return QuantileField(spec, float(meta["alpha"]), int(meta["n"]), arr, strategy)
