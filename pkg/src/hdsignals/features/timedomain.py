"""Hjorth, statistical and slope features.

All functions reduce over the last axis, so a ``[epochs x channels x time]``
block is processed in one call. Variances are population variances.
"""
from __future__ import annotations

import numpy as np

from ..errors import SignalTooShort, ZeroMean, ZeroVariance

_EPS = np.finfo(np.float64).eps


def _check_length(y: np.ndarray, n: int) -> None:
    if y.shape[-1] < n:
        raise SignalTooShort(f"need at least {n} samples, got {y.shape[-1]}")


def _flat(v: np.ndarray, var: np.ndarray) -> np.ndarray:
    # variance indistinguishable from round-off of the values themselves
    scale = np.max(np.abs(v), axis=-1) if v.shape[-1] else np.zeros(v.shape[:-1])
    return var <= (64 * _EPS * scale) ** 2


def hjorth(y, fs: float = 1.0):
    """Return ``(activity, mobility, complexity)``.

    Derivatives are forward differences scaled by ``fs``, so mobility comes
    out in rad/s: a pure sinusoid at f Hz has mobility close to 2*pi*f and
    complexity close to 1.
    """
    y = np.asarray(y, dtype=np.float64)
    _check_length(y, 3)
    activity = y.var(axis=-1)
    dy = np.diff(y, axis=-1) * fs
    ddy = np.diff(dy, axis=-1) * fs
    var_dy = dy.var(axis=-1)
    var_ddy = ddy.var(axis=-1)
    if np.any(np.ptp(y, axis=-1) == 0) or np.any(_flat(y - y.mean(axis=-1, keepdims=True), activity)):
        raise ZeroVariance("constant signal: Hjorth mobility and complexity are undefined")
    if np.any(_flat(dy - dy.mean(axis=-1, keepdims=True), var_dy)):
        raise ZeroVariance("first derivative is constant: Hjorth complexity is undefined")
    mobility = np.sqrt(var_dy / activity)
    complexity = np.sqrt(var_ddy / var_dy) / mobility
    return activity, mobility, complexity


def statistical_features(y, mean=None):
    """Return ``(kurtosis, coef_of_variation, skewness, diff1_mean, diff1_max, diff2_mean, diff2_max)``.

    Kurtosis is Fisher (excess) kurtosis. ``diff*`` are the mean and max of the
    absolute first/second successive differences. The coefficient of variation
    divides the standard deviation by ``|mean|``; pass ``mean`` to use a
    reference mean other than the sample mean (for example, the offset that
    per-epoch centering removed).
    """
    y = np.asarray(y, dtype=np.float64)
    _check_length(y, 3)
    mu = y.mean(axis=-1)
    centered = y - mu[..., None]
    m2 = np.mean(centered**2, axis=-1)
    if np.any(np.ptp(y, axis=-1) == 0) or np.any(_flat(centered, m2)):
        raise ZeroVariance("constant signal: skewness, kurtosis and CoV are undefined")
    m3 = np.mean(centered**3, axis=-1)
    m4 = np.mean(centered**4, axis=-1)
    kurt = m4 / m2**2 - 3.0
    skew = m3 / m2**1.5
    ref = mu if mean is None else np.asarray(mean, dtype=np.float64)
    if np.any(ref == 0):
        raise ZeroMean("zero mean: coefficient of variation is undefined")
    cov = np.sqrt(m2) / np.abs(ref)
    d1 = np.abs(np.diff(y, axis=-1))
    d2 = np.abs(np.diff(y, n=2, axis=-1))
    return kurt, cov, skew, d1.mean(axis=-1), d1.max(axis=-1), d2.mean(axis=-1), d2.max(axis=-1)


def slope_features(y, fs: float = 1.0):
    """Mean and population variance of the sample-to-sample slope ``diff(y) * fs``."""
    y = np.asarray(y, dtype=np.float64)
    _check_length(y, 2)
    slopes = np.diff(y, axis=-1) * fs
    return slopes.mean(axis=-1), slopes.var(axis=-1)
