"""Vectorised log-gamma, digamma and trigamma for positive real arguments.

log-gamma uses the Lanczos approximation (g = 7, nine coefficients) with an
upward recurrence below 0.5; digamma and trigamma shift the argument up to
``_ASYMPTOTIC_FROM`` with the recurrence and finish with the asymptotic
series. Accuracy is around 1e-15 relative over (1e-13, 1e13).
"""

from __future__ import annotations

import math

import numpy as np

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_ASYMPTOTIC_FROM = 10.0


def _positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
        raise ValueError("argument must be positive and finite")
    return x


def _scalar_or_array(out: np.ndarray, ref):
    return float(out) if np.ndim(ref) == 0 else out


def gammaln(x):
    """Natural log of the gamma function."""
    x0 = _positive(x)
    x = np.array(x0, dtype=np.float64, copy=True)
    small = x < 0.5
    # ln Γ(x) = ln Γ(x + 1) - ln x keeps full accuracy for tiny x
    correction = np.where(small, np.log(np.where(small, x, 1.0)), 0.0)
    x = np.where(small, x + 1.0, x)

    xm1 = x - 1.0
    a = np.full_like(x, _LANCZOS_COEF[0])
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        a = a + c / (xm1 + i)
    t = xm1 + _LANCZOS_G + 0.5
    out = _HALF_LOG_2PI + (xm1 + 0.5) * np.log(t) - t + np.log(a) - correction
    return _scalar_or_array(out, x0)


def digamma(x):
    """Logarithmic derivative of the gamma function."""
    x0 = _positive(x)
    x = np.array(x0, dtype=np.float64, copy=True)
    acc = np.zeros_like(x)
    mask = x < _ASYMPTOTIC_FROM
    while np.any(mask):
        acc[mask] -= 1.0 / x[mask]
        x[mask] += 1.0
        mask = x < _ASYMPTOTIC_FROM
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv2 * (
        1.0 / 12
        - inv2 * (1.0 / 120
        - inv2 * (1.0 / 252
        - inv2 * (1.0 / 240
        - inv2 * (1.0 / 132
        - inv2 * (691.0 / 32760
        - inv2 * (1.0 / 12)))))))
    out = acc + np.log(x) - 0.5 * inv - series
    return _scalar_or_array(out, x0)


def trigamma(x):
    """Second derivative of log-gamma."""
    x0 = _positive(x)
    x = np.array(x0, dtype=np.float64, copy=True)
    acc = np.zeros_like(x)
    mask = x < _ASYMPTOTIC_FROM
    while np.any(mask):
        acc[mask] += 1.0 / (x[mask] * x[mask])
        x[mask] += 1.0
        mask = x < _ASYMPTOTIC_FROM
    inv = 1.0 / x
    inv2 = inv * inv
    # Bernoulli-number tail: B2/x^3 + B4/x^5 + ...
    tail = inv * inv2 * (
        1.0 / 6
        - inv2 * (1.0 / 30
        - inv2 * (1.0 / 42
        - inv2 * (1.0 / 30
        - inv2 * (5.0 / 66
        - inv2 * (691.0 / 2730
        - inv2 * (7.0 / 6)))))))
    out = acc + inv + 0.5 * inv2 + tail
    return _scalar_or_array(out, x0)
