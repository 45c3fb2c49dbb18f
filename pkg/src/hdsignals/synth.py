"""Class-conditional synthetic EEG/ECG/fNIRS recordings.

Positives differ from controls by attenuated EEG alpha, lower overall
amplitude, irregular ECG rhythm and weaker oxy/deoxy coupling in fNIRS. Every
difference is multiplied by ``effect_size``; at 0 the two classes are drawn
from the same distribution. Each patient also gets its own random gain, alpha
frequency and heart rate, and every recording drifts slowly in amplitude and
rate, so epochs vary within a patient about as much as between patients.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .signal_io import (
    ECG,
    EEG,
    FNIRS,
    DatasetManifest,
    Diagnosis,
    ManifestEntry,
    Recording,
    write_manifest,
    write_recording_csv,
    write_npy,
)

DEFAULT_DURATION_S = 60.0


@dataclass(frozen=True)
class SynthParams:
    eeg_alpha_uv: float = 20.0
    eeg_background_uv: float = 10.0
    alpha_drop: float = 0.6  # fractional alpha loss for positives at effect 1
    amplitude_drop: float = 0.25
    ecg_amplitude_mv: float = 1.0
    rr_mean_s: float = 0.85
    rr_jitter_s: float = 0.02
    rr_extra_jitter_s: float = 0.12
    fnirs_coupling: float = 0.9
    coupling_drop: float = 0.8
    patient_spread: float = 0.03  # log-SD of fixed per-patient gain and rates
    drift: float = 0.15  # log-SD of slow within-recording amplitude drift
    drift_hz: float = 0.05


def _slow_drift(rng, n_channels: int, n: int, fs: float, sd: float, cutoff_hz: float) -> np.ndarray:
    """Multiplicative drift ``exp(sd * z)`` with ``z`` unit-variance low-passed noise."""
    if sd == 0:
        return np.ones((n_channels, n))
    # generate at 10 Hz and interpolate; a pole this close to 1 at 1 kHz is wasteful
    coarse_fs = 10.0
    m = int(np.ceil(n / fs * coarse_fs)) + 2
    pole = np.exp(-2 * np.pi * cutoff_hz / coarse_fs)
    white = rng.standard_normal((n_channels, m + 200))
    z = sps.lfilter([1 - pole], [1, -pole], white, axis=-1)[:, 200:]
    z = (z - z.mean(axis=-1, keepdims=True)) / z.std(axis=-1, keepdims=True)
    t_coarse = np.arange(m) / coarse_fs
    t = np.arange(n) / fs
    return np.exp(sd * np.stack([np.interp(t, t_coarse, row) for row in z]))


def _pink(rng, n_channels: int, n: int, fs: float) -> np.ndarray:
    # white noise through a one-pole low-pass gives a 1/f-like background
    white = rng.standard_normal((n_channels, n))
    pole = np.exp(-2 * np.pi * 4.0 / fs)
    out = sps.lfilter([1 - pole], [1, -pole], white, axis=-1)
    return out / out.std(axis=-1, keepdims=True)


def synth_eeg(rng, positive: bool, effect: float, duration_s: float, p: SynthParams) -> np.ndarray:
    fs = EEG.sampling_rate_hz
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    gain = np.exp(p.patient_spread * rng.standard_normal())
    alpha_hz = 10.0 * np.exp(p.patient_spread * rng.standard_normal())
    shrink = 1 - p.amplitude_drop * effect if positive else 1.0
    alpha_amp = p.eeg_alpha_uv * (1 - p.alpha_drop * effect if positive else 1.0)
    channel_alpha = alpha_amp * np.exp(p.patient_spread * rng.standard_normal((EEG.expected_channels, 1)))
    # slow amplitude modulation so alpha waxes and wanes
    envelope = 1 + 0.3 * np.sin(2 * np.pi * rng.uniform(0.05, 0.2, size=(EEG.expected_channels, 1)) * t)
    phase = rng.uniform(0, 2 * np.pi, size=(EEG.expected_channels, 1))
    alpha = channel_alpha * envelope * np.sin(2 * np.pi * alpha_hz * t + phase)
    background = p.eeg_background_uv * _pink(rng, EEG.expected_channels, n, fs)
    drift = _slow_drift(rng, EEG.expected_channels, n, fs, p.drift, p.drift_hz)
    return (gain * shrink * drift * (alpha + background) * 1e-6).astype(np.float32)


def synth_ecg(rng, positive: bool, effect: float, duration_s: float, p: SynthParams) -> np.ndarray:
    fs = ECG.sampling_rate_hz
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    rr_mean = p.rr_mean_s * np.exp(p.patient_spread * rng.standard_normal())
    jitter = p.rr_jitter_s + (p.rr_extra_jitter_s * effect if positive else 0.0)
    # heart rate and amplitude wander slowly over the recording
    rate_drift = _slow_drift(rng, 1, n, fs, p.drift / 2, p.drift_hz)[0]
    amp_drift = _slow_drift(rng, 1, n, fs, p.drift, p.drift_hz)[0]
    beats = []
    at = rng.uniform(0, rr_mean)
    while at < duration_s + 1:
        beats.append(at)
        local = rr_mean * rate_drift[min(int(at * fs), n - 1)]
        at += max(0.3, local + jitter * rng.standard_normal())
    beats = np.asarray(beats)
    amp = p.ecg_amplitude_mv * 1e-3 * np.exp(p.patient_spread * rng.standard_normal())
    amp *= 1 - p.amplitude_drop * effect if positive else 1.0
    x = np.zeros(n)
    # each beat: narrow QRS spike plus a broad T wave
    for b in beats:
        lo, hi = np.searchsorted(t, [b - 0.1, b + 0.45])
        seg = t[lo:hi] - b
        x[lo:hi] += amp * (np.exp(-0.5 * (seg / 0.012) ** 2) + 0.3 * np.exp(-0.5 * ((seg - 0.25) / 0.04) ** 2))
    x = x * amp_drift + 0.02 * amp * rng.standard_normal(n)
    return x[None, :]


def synth_fnirs(rng, positive: bool, effect: float, duration_s: float, p: SynthParams) -> np.ndarray:
    fs = FNIRS.sampling_rate_hz
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    n_optodes = FNIRS.expected_channels // 2
    gain = np.exp(p.patient_spread * rng.standard_normal())
    shrink = 1 - p.amplitude_drop * effect if positive else 1.0
    coupling = p.fnirs_coupling * (1 - p.coupling_drop * effect if positive else 1.0)
    cardiac = 1.1 * np.exp(p.patient_spread * rng.standard_normal())
    resp = 0.32 * np.exp(p.patient_spread * rng.standard_normal())
    out = np.empty((FNIRS.expected_channels, n))
    for i in range(n_optodes):
        hemo = (
            np.sin(2 * np.pi * cardiac * t + rng.uniform(0, 2 * np.pi))
            + 0.8 * np.sin(2 * np.pi * resp * t + rng.uniform(0, 2 * np.pi))
            + 0.5 * rng.standard_normal(n)
        )
        own = rng.standard_normal(n)
        oxy = hemo
        deoxy = -(coupling * hemo + np.sqrt(1 - coupling**2) * own)
        out[2 * i] = oxy
        out[2 * i + 1] = 0.5 * deoxy
    drift = _slow_drift(rng, FNIRS.expected_channels, n, fs, p.drift, p.drift_hz)
    return (gain * shrink * 1e-2 * drift * out).astype(np.float32)


def cmd_synth(
    out_dir,
    seed: int = 0,
    n_patients: int = 40,
    effect_size: float = 1.0,
    duration_s: float = DEFAULT_DURATION_S,
    params: SynthParams | None = None,
) -> Path:
    """Write ``n_patients`` recordings (half positive) and a manifest; returns
    the manifest path. Output depends only on the arguments."""
    if n_patients < 4 or n_patients % 2:
        raise ValueError(f"n_patients must be an even number >= 4, got {n_patients}")
    if effect_size < 0:
        raise ValueError(f"effect_size must be >= 0, got {effect_size}")
    if duration_s < 10:
        raise ValueError(f"duration_s must be >= 10, got {duration_s}")
    p = params or SynthParams()
    out_dir = Path(out_dir)
    sig_dir = out_dir / "signals"
    sig_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    width = len(str(n_patients))
    for i in range(n_patients):
        pid = f"S{i:0{width}d}"
        positive = i % 2 == 1
        diagnosis = (Diagnosis.SHD if i % 4 == 1 else Diagnosis.PHD) if positive else Diagnosis.CONTROL
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
        paths = {
            "eeg": sig_dir / f"{pid}_eeg.npy",
            "ecg": sig_dir / f"{pid}_ecg.csv",
            "fnirs": sig_dir / f"{pid}_fnirs.npy",
        }
        write_npy(synth_eeg(rng, positive, effect_size, duration_s, p), paths["eeg"], dtype="<f4")
        ecg = synth_ecg(rng, positive, effect_size, duration_s, p)
        write_recording_csv(Recording(pid, ECG, ("ECG",), ecg), paths["ecg"])
        write_npy(synth_fnirs(rng, positive, effect_size, duration_s, p), paths["fnirs"], dtype="<f4")
        entries.append(ManifestEntry(pid, diagnosis, paths))
    manifest_path = out_dir / "manifest.json"
    write_manifest(DatasetManifest(tuple(entries)), manifest_path)
    return manifest_path
