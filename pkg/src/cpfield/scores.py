"""Per-cell non-conformity score stacks.

Two strategies:

* RES, for deterministic forecasts: absolute residual |truth - prediction|.
* STD, for probabilistic (mean, sigma) forecasts: |truth - mean| / sigma, with
  sigma clamped below by ``sigma_floor``. The absolute value makes the score
  two-sided, matching the symmetric prediction set mean +- q*sigma; a zero
  reported sigma (e.g. a quantity pinned to a constant) degrades gracefully to
  near-residual ranking at that cell instead of dividing by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CalibrationSet, GridSpec

__all__ = ["ScoreStrategy", "ScoreSet", "score_res", "score_std", "DEFAULT_SIGMA_FLOOR"]

DEFAULT_SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class ScoreStrategy:
    """Score family tag plus the sigma floor (used only by STD)."""

    tag: str
    sigma_floor: float = DEFAULT_SIGMA_FLOOR

    def __post_init__(self):
        if self.tag not in ("RES", "STD"):
            raise ValueError(f"tag must be 'RES' or 'STD', got {self.tag!r}")
        if not self.sigma_floor >= 0:
            raise ValueError(f"sigma_floor must be >= 0, got {self.sigma_floor}")

    @classmethod
    def res(cls) -> "ScoreStrategy":
        return cls("RES")

    @classmethod
    def std(cls, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> "ScoreStrategy":
        return cls("STD", sigma_floor)


class ScoreSet:
    """Stack of n non-conformity score fields, shape (n, t_out, nx, ny, nvar).

    Scores are non-negative and finite; the stack order follows the
    calibration sample order (exchangeable, so any fixed order works).
    """

    __slots__ = ("spec", "scores", "strategy")

    def __init__(self, spec: GridSpec, scores: np.ndarray, strategy: ScoreStrategy):
        arr = np.asarray(scores, dtype=np.float64)
        if arr.ndim != 5 or arr.shape[1:] != spec.shape:
            raise ValueError(
                f"scores shape {arr.shape} does not match (n, *{spec.shape})"
            )
        if arr.shape[0] < 1:
            raise ValueError("score stack needs n >= 1")
        if not np.isfinite(arr).all():
            raise ValueError("scores must be finite")
        if (arr < 0).any():
            raise ValueError("scores must be non-negative")
        view = arr.view()
        view.setflags(write=False)
        self.spec = spec
        self.scores = view
        self.strategy = strategy

    @property
    def n(self) -> int:
        return int(self.scores.shape[0])

    def __repr__(self):
        return f"ScoreSet(n={self.n}, shape={self.spec.shape}, strategy={self.strategy.tag})"


def score_res(calib: CalibrationSet) -> ScoreSet:
    """RES scores: scores[i, c] = |truths[i][c] - predictions[i][c]|."""
    if calib.predictions is None:
        raise ValueError("RES scoring needs deterministic predictions")
    stack = np.empty((calib.n, *calib.spec.shape), dtype=np.float64)
    for i, (truth, pred) in enumerate(zip(calib.truths, calib.predictions)):
        np.abs(truth.data - pred.data, out=stack[i])
    return ScoreSet(calib.spec, stack, ScoreStrategy.res())


def score_std(calib: CalibrationSet, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> ScoreSet:
    """STD scores: scores[i, c] = |truths[i][c] - mean[i][c]| / max(sigma[i][c], floor)."""
    if calib.means is None or calib.sigmas is None:
        raise ValueError("STD scoring needs probabilistic means and sigmas")
    strategy = ScoreStrategy.std(sigma_floor)
    stack = np.empty((calib.n, *calib.spec.shape), dtype=np.float64)
    for i, (truth, mean, sigma) in enumerate(zip(calib.truths, calib.means, calib.sigmas)):
        np.abs(truth.data - mean.data, out=stack[i])
        stack[i] /= np.maximum(sigma.data, strategy.sigma_floor)
    return ScoreSet(calib.spec, stack, strategy)
