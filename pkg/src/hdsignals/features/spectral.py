"""Welch power spectral density and band power."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BandOutOfRange, SegmentTooLong

EEG_BANDS = (
    ("delta", 0.5, 3.5),
    ("theta", 3.5, 7.5),
    ("alpha", 7.5, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 45.0),
)
ECG_BANDS = (
    ("LF", 0.05, 6.0),
    ("LMF", 6.0, 11.0),
    ("MF", 11.0, 16.0),
    ("HF", 16.0, 20.0),
    ("VHF", 20.0, 100.0),
)
FNIRS_BANDS = (
    ("resp", 0.2, 0.6),
    ("cardiac", 0.6, 1.5),
)


@dataclass(frozen=True)
class WelchConfig:
    segment_len_samples: int
    overlap_fraction: float = 0.5
    window: str = "hann"

    def __post_init__(self):
        if self.segment_len_samples < 2:
            raise ValueError(f"segment length must be >= 2 samples, got {self.segment_len_samples}")
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError(f"overlap fraction must lie in [0, 1), got {self.overlap_fraction}")
        if self.window != "hann":
            raise ValueError(f"only the Hann window is supported, got {self.window!r}")


@dataclass(frozen=True)
class Spectrum:
    freqs_hz: np.ndarray
    power: np.ndarray  # [..., n_freqs]
    resolution_hz: float


def hann(m: int) -> np.ndarray:
    """Periodic Hann window (the DFT-even form used for spectral estimation)."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(m) / m)


def welch_psd(y, fs: float, cfg: WelchConfig) -> Spectrum:
    """One-sided PSD (units^2/Hz) averaged over Hann-windowed, mean-removed segments."""
    x = np.asarray(y, dtype=np.float64)
    m = cfg.segment_len_samples
    n = x.shape[-1]
    if n < m:
        raise SegmentTooLong(f"segment of {m} samples exceeds signal of {n}")
    step = m - int(round(m * cfg.overlap_fraction))
    step = max(step, 1)
    starts = np.arange(0, n - m + 1, step)
    win = hann(m)
    scale = 1.0 / (fs * np.sum(win**2))
    acc = np.zeros(x.shape[:-1] + (m // 2 + 1,))
    for s in starts:
        seg = x[..., s : s + m]
        seg = seg - seg.mean(axis=-1, keepdims=True)
        spec = np.fft.rfft(seg * win, axis=-1)
        acc += np.abs(spec) ** 2
    power = acc * scale / len(starts)
    # fold negative frequencies, except DC and (for even m) Nyquist
    if m % 2:
        power[..., 1:] *= 2
    else:
        power[..., 1:-1] *= 2
    freqs = np.fft.rfftfreq(m, d=1.0 / fs)
    return Spectrum(freqs, power, fs / m)


def _interp_last(freqs: np.ndarray, power: np.ndarray, f: float) -> np.ndarray:
    j = int(np.searchsorted(freqs, f, side="right")) - 1
    j = min(max(j, 0), len(freqs) - 2)
    w = (f - freqs[j]) / (freqs[j + 1] - freqs[j])
    return (1 - w) * power[..., j] + w * power[..., j + 1]


def band_power(s: Spectrum, band) -> np.ndarray:
    """Trapezoidal integral of the PSD over ``[low, high]`` Hz.

    ``band`` is ``(low, high)`` or ``(name, low, high)``. Band edges that fall
    between bins are linearly interpolated.
    """
    low, high = (band[1], band[2]) if len(band) == 3 else band
    freqs = np.asarray(s.freqs_hz)
    tol = 1e-9 * max(abs(freqs[-1]), 1.0)
    if not low < high:
        raise BandOutOfRange(f"band low edge {low} must be below high edge {high}")
    if low < freqs[0] - tol or high > freqs[-1] + tol:
        raise BandOutOfRange(f"band [{low}, {high}] Hz outside spectrum [{freqs[0]}, {freqs[-1]}] Hz")
    low, high = max(low, freqs[0]), min(high, freqs[-1])
    inner = np.flatnonzero((freqs > low) & (freqs < high))
    grid = np.concatenate([[low], freqs[inner], [high]])
    vals = np.concatenate(
        [_interp_last(freqs, s.power, low)[..., None], s.power[..., inner], _interp_last(freqs, s.power, high)[..., None]],
        axis=-1,
    )
    return np.sum((vals[..., 1:] + vals[..., :-1]) * 0.5 * np.diff(grid), axis=-1)
