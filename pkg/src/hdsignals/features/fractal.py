"""Higuchi fractal dimension."""
from __future__ import annotations

import numpy as np

from ..errors import DegenerateLengths, SignalTooShort


def curve_lengths(y, k_max: int) -> np.ndarray:
    """Mean normalized curve length L(k) for k = 1..k_max, along the last axis."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[-1]
    lengths = np.empty(y.shape[:-1] + (k_max,))
    for k in range(1, k_max + 1):
        acc = np.zeros(y.shape[:-1])
        for m in range(k):
            sub = y[..., m::k]
            n_m = sub.shape[-1] - 1
            if n_m < 1:
                continue
            dist = np.abs(np.diff(sub, axis=-1)).sum(axis=-1)
            acc += dist * (n - 1) / (n_m * k) / k
        lengths[..., k - 1] = acc / k
    return lengths


def higuchi_fd(y, k_max: int = 10):
    """Higuchi fractal dimension: minus the slope of ln L(k) against ln k.

    About 1 for smooth curves and about 2 for white noise.
    """
    y = np.asarray(y, dtype=np.float64)
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2, got {k_max}")
    if y.shape[-1] < 2 * k_max:
        raise SignalTooShort(f"Higuchi FD with k_max={k_max} needs >= {2 * k_max} samples, got {y.shape[-1]}")
    lengths = curve_lengths(y, k_max)
    if np.any(lengths <= 0):
        raise DegenerateLengths("zero curve length (constant signal): fractal dimension undefined")
    ln_k = np.log(np.arange(1, k_max + 1, dtype=np.float64))
    ln_l = np.log(lengths)
    xc = ln_k - ln_k.mean()
    slope = ((ln_l - ln_l.mean(axis=-1, keepdims=True)) * xc).sum(axis=-1) / (xc**2).sum()
    return -slope
