"""Synthetic autoregressive Gaussian-field forecasts with a known error law.

Each sample is an AR(1) rollout over the grid:

    X^0     ~ stationary law, sd sigma_step(x, y) / sqrt(1 - a^2)
    X^{t+1} = a * X^t + forcing + eta^t,   eta^t spatially smooth Gaussian,
                                           marginal sd sigma_step(x, y)

The forecast ("mean") is the conditional-mean rollout given X^0, so the
forecast error at lead step t is Gaussian with exactly

    sigma_true(t)^2 = sigma_step^2 * (1 - a^(2t)) / (1 - a^2),

which is what the conformal pipeline is validated against. The model reports
sigma_model = miscalibration * sigma_true.

Spatial correlation is a separable box moving average of white noise whose
per-cell variance is renormalized to 1, so the marginal law above stays exact
at every cell; only the correlation shape is approximate (and not
contractual).

In heteroscedastic mode sigma_step is a smooth periodic field spanning a 4x
range, circularly shifted by a per-sample random offset. At a fixed cell the
error sd then varies between samples (the analogue of day/night forecast
difficulty), which is what makes sigma-aware STD intervals genuinely tighter
than RES at equal coverage; the reported sigma_model tracks the shifted field
exactly.

Randomness is a Philox4x64-10 counter-based stream keyed by
(seed, sample_index); normals come from the Box-Muller transform over 53-bit
uniforms. The exact stream layout is documented in docs/formats.md so other
implementations can reproduce outputs bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import FieldTensor, GridSpec
from .normal import central_z

__all__ = [
    "SynthConfig",
    "SyntheticSample",
    "generate_pair",
    "generate_samples",
    "true_sigma",
    "true_quantile",
    "sigma_step_field",
    "sample_shift",
]

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings; (cfg, seed) fully determine every output byte."""

    spec: GridSpec
    ar_coeff: float
    noise_sd: float
    spatial_corr_len: float = 0.0
    miscalibration: float = 1.0
    heteroscedastic: bool = False
    forcing: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not abs(self.ar_coeff) < 1.0:
            raise ValueError(f"ar_coeff must lie in (-1, 1), got {self.ar_coeff}")
        if not self.noise_sd > 0:
            raise ValueError(f"noise_sd must be > 0, got {self.noise_sd}")
        if not self.spatial_corr_len >= 0:
            raise ValueError(f"spatial_corr_len must be >= 0, got {self.spatial_corr_len}")
        if not self.miscalibration > 0:
            raise ValueError(f"miscalibration must be > 0, got {self.miscalibration}")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def to_json_dict(self) -> dict:
        d = self.spec.to_sidecar()
        d.update(
            ar_coeff=self.ar_coeff,
            noise_sd=self.noise_sd,
            spatial_corr_len=self.spatial_corr_len,
            miscalibration=self.miscalibration,
            heteroscedastic=self.heteroscedastic,
            forcing=self.forcing,
            seed=self.seed,
        )
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthConfig":
        return cls(
            spec=GridSpec.from_sidecar(d),
            ar_coeff=float(d["ar_coeff"]),
            noise_sd=float(d["noise_sd"]),
            spatial_corr_len=float(d["spatial_corr_len"]),
            miscalibration=float(d["miscalibration"]),
            heteroscedastic=bool(d["heteroscedastic"]),
            forcing=float(d.get("forcing", 0.0)),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class SyntheticSample:
    """One generated forecast case.

    ``prediction`` is the deterministic point forecast and equals ``mean``
    (both are the conditional-mean rollout); ``sigma`` is the model-reported
    sd, miscalibration * sigma_true.
    """

    truth: FieldTensor
    prediction: FieldTensor
    mean: FieldTensor
    sigma: FieldTensor


def _stream(seed: int, stream_id: int) -> np.random.Philox:
    """Philox4x64-10 keyed by the 128-bit (seed, stream_id) pair."""
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=_U64)
    return np.random.Philox(key=key)


def _standard_normals(raw: np.ndarray, n: int) -> np.ndarray:
    """Box-Muller (trigonometric form) over consecutive raw 64-bit words.

    Word pair (w0, w1) maps to u1 = ((w0 >> 11) + 1) * 2^-53 in (0, 1] and
    u2 = (w1 >> 11) * 2^-53 in [0, 1); the pair of normals is
    (r cos(2 pi u2), r sin(2 pi u2)) with r = sqrt(-2 ln u1).
    """
    pairs = raw.reshape(-1, 2)
    u1 = ((pairs[:, 0] >> _U64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (pairs[:, 1] >> _U64(11)).astype(np.float64) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty(pairs.shape[0] * 2, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]


def _box_sum(arr: np.ndarray, radius: int, axis: int) -> np.ndarray:
    """Sliding-window sum of length 2*radius+1, truncated at the edges."""
    n = arr.shape[axis]
    cum = np.cumsum(arr, axis=axis)
    zero_shape = list(arr.shape)
    zero_shape[axis] = 1
    cum = np.concatenate([np.zeros(zero_shape, dtype=arr.dtype), cum], axis=axis)
    idx = np.arange(n)
    hi = np.minimum(idx + radius, n - 1) + 1
    lo = np.maximum(idx - radius, 0)
    return cum.take(hi, axis=axis) - cum.take(lo, axis=axis)


def _window_counts(n: int, radius: int) -> np.ndarray:
    idx = np.arange(n)
    return (np.minimum(idx + radius, n - 1) - np.maximum(idx - radius, 0) + 1).astype(
        np.float64
    )


def _smooth_unit_noise(white: np.ndarray, radius: int) -> np.ndarray:
    """Box-smooth white noise along the x/y axes (1 and 2) and renormalize so
    every cell keeps exactly unit marginal variance."""
    if radius <= 0:
        return white
    out = _box_sum(white, radius, axis=1)
    out = _box_sum(out, radius, axis=2)
    nx, ny = white.shape[1], white.shape[2]
    norm = np.sqrt(np.outer(_window_counts(nx, radius), _window_counts(ny, radius)))
    return out / norm[None, :, :, None]


def sigma_step_field(cfg: SynthConfig, shift: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Per-cell innovation sd, shape (nx, ny).

    Homoscedastic: constant noise_sd. Heteroscedastic: a smooth periodic
    field noise_sd * (1 + 3*(2 + sin(2 pi x / nx) + sin(2 pi y / ny)) / 4),
    spanning [noise_sd, 4*noise_sd], circularly shifted by ``shift``.
    """
    nx, ny = cfg.spec.nx, cfg.spec.ny
    if not cfg.heteroscedastic:
        return np.full((nx, ny), cfg.noise_sd)
    x = np.arange(nx)
    y = np.arange(ny)
    u = (2.0 + np.sin(2.0 * np.pi * x / nx)[:, None] + np.sin(2.0 * np.pi * y / ny)[None, :]) / 4.0
    base = cfg.noise_sd * (1.0 + 3.0 * u)
    return np.roll(base, shift, axis=(0, 1))


def sample_shift(cfg: SynthConfig, sample_index: int) -> tuple[int, int]:
    """The sigma-field shift sample ``sample_index`` would use (het mode)."""
    raw = _stream(cfg.seed, sample_index).random_raw(2)
    return int(raw[0] % _U64(cfg.spec.nx)), int(raw[1] % _U64(cfg.spec.ny))


def _growth(cfg: SynthConfig, steps: int) -> float:
    """sqrt((1 - a^(2t)) / (1 - a^2)), the error-sd multiplier after t steps."""
    a = cfg.ar_coeff
    if a == 0.0:
        return 1.0
    return math.sqrt((1.0 - a ** (2 * steps)) / (1.0 - a * a))


def true_sigma(cfg: SynthConfig, steps: int) -> float:
    """Exact forecast-error sd after ``steps`` rollout steps (homoscedastic
    law; lead slot i of a tensor corresponds to steps = i + 1)."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    return cfg.noise_sd * _growth(cfg, steps)


def true_quantile(cfg: SynthConfig, steps: int, alpha: float) -> float:
    """Half-width z_{1-alpha/2} * sigma_true(steps) of the ideal central
    (1-alpha) interval for the Gaussian error at that lead."""
    return central_z(alpha) * true_sigma(cfg, steps)


def generate_pair(cfg: SynthConfig, sample_index: int = 0) -> SyntheticSample:
    """Generate one (truth, prediction, mean, sigma) case.

    The sample's stream is Philox keyed by (cfg.seed, sample_index):
    2 raw words for the sigma-field shift (consumed in every mode), then
    2*ceil(N/2) words for the N = (t_out+1)*nx*ny*nvar Box-Muller normals
    (initial state first, then one innovation field per step).
    """
    spec = cfg.spec
    t_out, nx, ny, nvar = spec.shape
    n_normals = (t_out + 1) * nx * ny * nvar
    n_pairs = (n_normals + 1) // 2

    bitgen = _stream(cfg.seed, sample_index)
    raw = bitgen.random_raw(2 + 2 * n_pairs)
    shift = (int(raw[0] % _U64(nx)), int(raw[1] % _U64(ny)))
    normals = _standard_normals(raw[2:], n_normals).reshape(t_out + 1, nx, ny, nvar)

    radius = int(round(cfg.spatial_corr_len))
    noise = _smooth_unit_noise(normals, radius)

    sd_field = sigma_step_field(cfg, shift)[None, :, :, None]
    a = cfg.ar_coeff
    stationary_sd = sd_field / math.sqrt(1.0 - a * a)

    state = stationary_sd[0] * noise[0]
    mean_state = state.copy()
    truth = np.empty(spec.shape)
    mean = np.empty(spec.shape)
    sigma = np.empty(spec.shape)
    for t in range(t_out):
        state = a * state + cfg.forcing + sd_field[0] * noise[t + 1]
        mean_state = a * mean_state + cfg.forcing
        truth[t] = state
        mean[t] = mean_state
        sigma[t] = cfg.miscalibration * _growth(cfg, t + 1) * sd_field[0]

    truth_t = FieldTensor(spec, truth)
    mean_t = FieldTensor(spec, mean)
    return SyntheticSample(
        truth=truth_t,
        prediction=mean_t,
        mean=mean_t,
        sigma=FieldTensor(spec, sigma),
    )


def generate_samples(cfg: SynthConfig, n_samples: int, start_index: int = 0):
    """Yield ``n_samples`` consecutive samples (indices start_index, ...)."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    for i in range(start_index, start_index + n_samples):
        yield generate_pair(cfg, i)
