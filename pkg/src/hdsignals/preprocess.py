"""Band-pass filtering, epoching, amplitude rejection and per-epoch centering."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import (
    AllEpochsRejected,
    EmptyEpochSet,
    EmptySignal,
    EpochTooLong,
    InvalidBand,
    MissingFile,
    NonPositiveStep,
)
from .signal_io import Modality, Recording, get_modality, read_npy, write_npy

FILTER_ORDER = 4


@dataclass(frozen=True)
class BandPassSpec:
    low_cut_hz: float
    high_cut_hz: float

    def validate(self, fs: float) -> None:
        if self.low_cut_hz < 0:
            raise InvalidBand(f"low cut must be >= 0, got {self.low_cut_hz}")
        if self.high_cut_hz <= self.low_cut_hz:
            raise InvalidBand(f"high cut {self.high_cut_hz} must exceed low cut {self.low_cut_hz}")
        if self.high_cut_hz >= fs / 2:
            raise InvalidBand(f"high cut {self.high_cut_hz} Hz is not below Nyquist ({fs / 2} Hz)")


@dataclass(frozen=True)
class ModalityPreprocess:
    """Per-modality preprocessing parameters.

    Exactly one of ``ptp_threshold`` (absolute, in recording units) and
    ``iqr_factor`` (multiple of each channel's interquartile range over the
    filtered recording) sets the rejection threshold.
    """

    low_cut_hz: float
    high_cut_hz: float
    ptp_threshold: float | None = None
    iqr_factor: float | None = None

    @property
    def band(self) -> BandPassSpec:
        return BandPassSpec(self.low_cut_hz, self.high_cut_hz)


def _default_modalities() -> dict[str, ModalityPreprocess]:
    return {
        "eeg": ModalityPreprocess(0.5, 45.0, ptp_threshold=800e-6),
        "ecg": ModalityPreprocess(0.05, 100.0, ptp_threshold=5e-3),
        "fnirs": ModalityPreprocess(0.2, 1.5, iqr_factor=6.0),
    }


@dataclass(frozen=True)
class PreprocessConfig:
    epoch_len_s: float = 5.0
    overlap_s: float = 1.0
    modalities: dict[str, ModalityPreprocess] = field(default_factory=_default_modalities)

    @classmethod
    def from_dict(cls, raw: dict | None) -> "PreprocessConfig":
        raw = dict(raw or {})
        mods = _default_modalities()
        for key, block in (raw.pop("modalities", None) or {}).items():
            key = get_modality(key).key
            merged = {**mods[key].__dict__, **block}
            mods[key] = ModalityPreprocess(**merged)
        return cls(modalities=mods, **raw)


@dataclass(frozen=True)
class EpochSet:
    patient_id: str
    modality: Modality
    channel_names: tuple[str, ...]
    epochs: np.ndarray  # [n_epochs x channels x samples_per_epoch]
    epoch_len_s: float
    step_s: float
    kept_indices: tuple[int, ...]
    # per-epoch, per-channel means removed by normalize_epochs; adding them
    # back recovers the un-centered epoch
    offsets: np.ndarray | None = None

    def __post_init__(self):
        epochs = np.ascontiguousarray(self.epochs, dtype=np.float64)
        if epochs.ndim != 3:
            raise ValueError(f"epochs must be 3-D, got shape {epochs.shape}")
        if len(self.kept_indices) != epochs.shape[0]:
            raise ValueError("kept_indices length must equal the epoch count")
        offsets = self.offsets
        if offsets is None:
            offsets = np.zeros(epochs.shape[:2])
        offsets = np.ascontiguousarray(offsets, dtype=np.float64)
        if offsets.shape != epochs.shape[:2]:
            raise ValueError(f"offsets shape {offsets.shape} does not match epochs {epochs.shape[:2]}")
        epochs.flags.writeable = False
        offsets.flags.writeable = False
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "kept_indices", tuple(int(i) for i in self.kept_indices))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def n_epochs(self) -> int:
        return self.epochs.shape[0]

    @property
    def fs(self) -> float:
        return self.modality.sampling_rate_hz

    @property
    def samples_per_epoch(self) -> int:
        return self.epochs.shape[2]


def bandpass_filter(rec: Recording, spec: BandPassSpec, order: int = FILTER_ORDER) -> Recording:
    """Zero-phase Butterworth band-pass (forward-backward) applied per channel."""
    spec.validate(rec.fs)
    if rec.n_samples == 0:
        raise EmptySignal(f"{rec.patient_id}/{rec.modality.name}: recording has no samples")
    if spec.low_cut_hz > 0:
        sos = signal.butter(order, [spec.low_cut_hz, spec.high_cut_hz], btype="bandpass", fs=rec.fs, output="sos")
    else:
        sos = signal.butter(order, spec.high_cut_hz, btype="lowpass", fs=rec.fs, output="sos")
    # Mirror-reflect the edges. Three filter orders of padding is far too short
    # for a 0.5 Hz high-pass (its transient lasts seconds), so pad by three
    # periods of the low cut as well; clipped for very short inputs.
    padlen = 3 * 2 * len(sos)
    if spec.low_cut_hz > 0:
        padlen = max(padlen, int(np.ceil(3 * rec.fs / spec.low_cut_hz)))
    padlen = min(padlen, rec.n_samples - 1)
    out = signal.sosfiltfilt(sos, rec.samples, axis=-1, padtype="even", padlen=padlen)
    return rec.with_samples(out)


def _window_starts(n_samples: int, fs: float, epoch_len_s: float, step_s: float) -> tuple[int, np.ndarray]:
    spe = int(round(epoch_len_s * fs))
    starts = []
    i = 0
    while True:
        start = int(round(i * step_s * fs))
        if start + spe > n_samples:
            break
        starts.append(start)
        i += 1
    return spe, np.asarray(starts, dtype=np.int64)


def segment(rec: Recording, epoch_len_s: float = 5.0, overlap_s: float = 1.0) -> EpochSet:
    """Cut ``rec`` into full-length windows every ``epoch_len_s - overlap_s`` seconds.

    Partial trailing windows are discarded, so a 1200 s recording gives 299
    five-second epochs.
    """
    step_s = epoch_len_s - overlap_s
    if epoch_len_s <= 0 or step_s <= 0:
        raise NonPositiveStep(f"epoch length {epoch_len_s}s with overlap {overlap_s}s gives step {step_s}s")
    spe, starts = _window_starts(rec.n_samples, rec.fs, epoch_len_s, step_s)
    if len(starts) == 0:
        raise EpochTooLong(
            f"{rec.patient_id}/{rec.modality.name}: {epoch_len_s}s epoch exceeds {rec.duration_s:g}s recording"
        )
    idx = starts[:, None] + np.arange(spe)[None, :]
    epochs = rec.samples[:, idx].transpose(1, 0, 2)
    return EpochSet(
        patient_id=rec.patient_id,
        modality=rec.modality,
        channel_names=rec.channel_names,
        epochs=epochs,
        epoch_len_s=float(epoch_len_s),
        step_s=float(step_s),
        kept_indices=tuple(range(len(starts))),
    )


def reject_bad_epochs(es: EpochSet, ptp_threshold) -> EpochSet:
    """Drop epochs where any channel's peak-to-peak amplitude exceeds the threshold.

    ``ptp_threshold`` is a scalar or one value per channel.
    """
    thr = np.broadcast_to(np.asarray(ptp_threshold, dtype=np.float64), (len(es.channel_names),))
    if not np.all(thr > 0):
        raise ValueError(f"rejection threshold must be > 0, got {ptp_threshold!r}")
    if es.n_epochs == 0:
        raise EmptyEpochSet(f"{es.patient_id}/{es.modality.name}: no epochs")
    ptp = np.ptp(es.epochs, axis=2)
    keep = ~(ptp > thr[None, :]).any(axis=1)
    if not keep.any():
        raise AllEpochsRejected(
            f"{es.patient_id}/{es.modality.name}: all {es.n_epochs} epochs exceed the amplitude threshold"
        )
    return replace(
        es,
        epochs=es.epochs[keep],
        offsets=es.offsets[keep],
        kept_indices=tuple(np.asarray(es.kept_indices)[keep].tolist()),
    )


def normalize_epochs(es: EpochSet) -> EpochSet:
    """Subtract each channel's mean within every epoch."""
    if es.n_epochs == 0:
        raise EmptyEpochSet(f"{es.patient_id}/{es.modality.name}: no epochs")
    means = es.epochs.mean(axis=2)
    return replace(es, epochs=es.epochs - means[:, :, None], offsets=es.offsets + means)


def rejection_threshold(rec: Recording, params: ModalityPreprocess) -> np.ndarray:
    if params.ptp_threshold is not None:
        return np.full(rec.samples.shape[0], float(params.ptp_threshold))
    if params.iqr_factor is None:
        raise ValueError(f"{rec.modality.name}: set either ptp_threshold or iqr_factor")
    q75, q25 = np.percentile(rec.samples, [75, 25], axis=1)
    iqr = q75 - q25
    # flat channels would give a zero threshold; fall back to the largest channel IQR
    iqr = np.where(iqr > 0, iqr, iqr.max() if iqr.max() > 0 else 1.0)
    return params.iqr_factor * iqr


def preprocess_recording(rec: Recording, cfg: PreprocessConfig) -> EpochSet:
    params = cfg.modalities[rec.modality.key]
    filtered = bandpass_filter(rec, params.band)
    es = segment(filtered, cfg.epoch_len_s, cfg.overlap_s)
    es = reject_bad_epochs(es, rejection_threshold(filtered, params))
    return normalize_epochs(es)


# -----------------------------------------------------------------------------
# persistence: <dir>/<modality>.npy, <modality>_offsets.npy, <modality>.json
# -----------------------------------------------------------------------------
def save_epochset(es: EpochSet, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    key = es.modality.key
    write_npy(es.epochs, directory / f"{key}.npy")
    write_npy(es.offsets, directory / f"{key}_offsets.npy")
    sidecar = {
        "patient_id": es.patient_id,
        "modality": es.modality.name,
        "channel_names": list(es.channel_names),
        "epoch_len_s": es.epoch_len_s,
        "step_s": es.step_s,
        "kept_indices": list(es.kept_indices),
    }
    (directory / f"{key}.json").write_text(json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")


def load_epochset(directory, modality) -> EpochSet:
    directory = Path(directory)
    modality = get_modality(modality)
    meta_path = directory / f"{modality.key}.json"
    if not meta_path.is_file():
        raise MissingFile(f"no epoch sidecar {meta_path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    epochs = read_npy(directory / f"{modality.key}.npy")
    offsets = read_npy(directory / f"{modality.key}_offsets.npy")
    return EpochSet(
        patient_id=meta["patient_id"],
        modality=modality,
        channel_names=tuple(meta["channel_names"]),
        epochs=epochs.reshape(len(meta["kept_indices"]), len(meta["channel_names"]), -1),
        epoch_len_s=meta["epoch_len_s"],
        step_s=meta["step_s"],
        kept_indices=tuple(meta["kept_indices"]),
        offsets=offsets.reshape(len(meta["kept_indices"]), len(meta["channel_names"])),
    )
