"""Single-level orthogonal DWT (periodic extension) and coefficient statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SignalTooShort

# analysis low-pass filters; the high-pass is the quadrature mirror
_DEC_LO = {
    "coif1": np.array([
        -0.015655728135791993, -0.07273261951252645, 0.3848648468648578,
        0.8525720202116004, 0.3378976624574818, -0.07273261951252645,
    ]),
    "db4": np.array([
        -0.010597401785069032, 0.0328830116668852, 0.030841381835560764,
        -0.18703481171909309, -0.027983769416859854, 0.6308807679298589,
        0.7148465705529157, 0.2303778133088965,
    ]),
}

WAVELETS = tuple(_DEC_LO)


def filter_bank(name: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        lo = _DEC_LO[name]
    except KeyError:
        raise ValueError(f"unknown wavelet {name!r}; expected one of {WAVELETS}") from None
    length = len(lo)
    hi = np.array([(-1) ** (k + 1) * lo[length - 1 - k] for k in range(length)])
    return lo, hi


@dataclass(frozen=True)
class WaveletCoeffs:
    approx: np.ndarray
    detail: np.ndarray
    wavelet_name: str


def dwt_level1(y, wavelet: str = "coif1") -> WaveletCoeffs:
    """One analysis step along the last axis.

    Coefficient ``i`` is ``sum_k h[k] * x[(2i + L/2 - k) mod n]``, the same
    alignment as PyWavelets' ``periodization`` mode. Odd-length inputs get one
    trailing zero so the transform stays energy preserving; both outputs have
    ``ceil(n / 2)`` coefficients.
    """
    lo, hi = filter_bank(wavelet)
    x = np.asarray(y, dtype=np.float64)
    if x.shape[-1] < len(lo):
        raise SignalTooShort(f"{wavelet} needs at least {len(lo)} samples, got {x.shape[-1]}")
    if x.shape[-1] % 2:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
    half = len(lo) // 2
    approx = np.zeros(x.shape[:-1] + (x.shape[-1] // 2,))
    detail = np.zeros_like(approx)
    for k in range(len(lo)):
        # x[(2i + half - k) mod n] for every i
        shifted = np.roll(x, -(half - k), axis=-1)[..., ::2]
        approx += lo[k] * shifted
        detail += hi[k] * shifted
    return WaveletCoeffs(approx, detail, wavelet)


def log_energy_entropy(c) -> np.ndarray:
    """``sum C^2 * ln(C^2)`` over the non-zero coefficients."""
    c2 = np.asarray(c, dtype=np.float64) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(c2 > 0, c2 * np.log(np.where(c2 > 0, c2, 1.0)), 0.0)
    return terms.sum(axis=-1)


def wavelet_features(c: WaveletCoeffs):
    """Mean, SD, energy and log-energy entropy of approx then detail coefficients."""
    out = []
    for coeffs in (c.approx, c.detail):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape[-1] == 0:
            raise SignalTooShort("empty coefficient sequence")
        out += [
            coeffs.mean(axis=-1),
            coeffs.std(axis=-1),
            np.sum(coeffs**2, axis=-1),
            log_energy_entropy(coeffs),
        ]
    return tuple(out)
