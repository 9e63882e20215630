"""Standard normal CDF and inverse CDF.

The inverse uses Wichura's Algorithm AS 241 (PPND16), a piecewise rational
approximation with absolute error below 1e-15 across (0, 1) in double
precision: central region |p - 0.5| <= 0.425 uses one rational in
r = 0.180625 - q^2; the tails use rationals in r = sqrt(-log(min(p, 1-p))),
split at r = 5. Chosen over Acklam / Abramowitz-Stegun 26.2.23 because the
uncalibrated-baseline z-quantiles must be good to at least 1e-8 absolute.
"""

from __future__ import annotations

import math

__all__ = ["norm_cdf", "inv_norm_cdf", "central_z"]

_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_B = (
    4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_D = (
    2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_F = (
    5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _ratio(num, den, r: float) -> float:
    n = num[-1]
    for coef in num[-2::-1]:
        n = n * r + coef
    d = den[-1]
    for coef in den[-2::-1]:
        d = d * r + coef
    return n / (d * r + 1.0)


def norm_cdf(x: float) -> float:
    """Phi(x) via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inv_norm_cdf(p: float) -> float:
    """Phi^-1(p) for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _ratio(_A, _B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        val = _ratio(_C, _D, r - 1.6)
    else:
        val = _ratio(_E, _F, r - 5.0)
    return -val if q < 0 else val


def central_z(alpha: float) -> float:
    """Half-width multiplier z_{1-alpha/2} of the central (1-alpha) normal interval."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return inv_norm_cdf(1.0 - alpha / 2.0)
