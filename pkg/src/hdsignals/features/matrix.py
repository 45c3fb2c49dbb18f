"""Per-epoch feature matrix assembly.

Column layout: modalities in configured order (default EEG, ECG, fNIRS); within
a modality, channels in recording order; within a channel::

    kurtosis, coef_of_variation, skewness, diff1_mean, diff1_max,
    diff2_mean, diff2_max                      (Statistical, 7)
    slope_mean, slope_variance, higuchi_fd     (Slope, 3)
    activity, mobility, complexity             (Hjorth, 3)
    approx_{mean,sd,energy,entropy},
    detail_{mean,sd,energy,entropy}            (Wavelet, 8)
    one column per PSD band                    (PSD, 5 for EEG/ECG, 2 for fNIRS)

which gives 16*26 + 1*26 + 22*23 = 948 columns for the full configuration.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..errors import FeatureComputationFailed, HDSignalsError, MissingModality
from ..preprocess import EpochSet
from ..signal_io import DatasetManifest, get_modality, read_npy, write_npy
from .fractal import higuchi_fd
from .spectral import ECG_BANDS, EEG_BANDS, FNIRS_BANDS, WelchConfig, band_power, welch_psd
from .timedomain import hjorth, slope_features, statistical_features
from .wavelet import dwt_level1, wavelet_features

STATISTICAL = ("kurtosis", "coef_of_variation", "skewness", "diff1_mean", "diff1_max", "diff2_mean", "diff2_max")
SLOPE = ("slope_mean", "slope_variance", "higuchi_fd")
HJORTH = ("activity", "mobility", "complexity")
WAVELET = tuple(f"{part}_{stat}" for part in ("approx", "detail") for stat in ("mean", "sd", "energy", "entropy"))

FAMILIES = ("Hjorth", "Statistical", "Slope", "Wavelet", "PSD")


@dataclass(frozen=True)
class FeatureDescriptor:
    modality: str
    channel: str
    family: str
    detail: str

    @property
    def name(self) -> str:
        return f"{self.modality}:{self.channel}:{self.detail}"


def _default_bands():
    return {"eeg": EEG_BANDS, "ecg": ECG_BANDS, "fnirs": FNIRS_BANDS}


@dataclass(frozen=True)
class FeatureConfig:
    modalities: tuple[str, ...] = ("eeg", "ecg", "fnirs")
    wavelets: dict[str, str] = field(default_factory=lambda: {"eeg": "coif1", "ecg": "db4", "fnirs": "coif1"})
    welch_segment_s: dict[str, float] = field(default_factory=lambda: {"eeg": 1.0, "ecg": 1.0, "fnirs": 2.0})
    welch_overlap: float = 0.5
    k_max: int = 10
    bands: dict[str, tuple] = field(default_factory=_default_bands)

    @classmethod
    def from_dict(cls, raw: dict | None) -> "FeatureConfig":
        raw = dict(raw or {})
        base = cls()
        kw = {}
        if "modalities" in raw:
            kw["modalities"] = tuple(get_modality(m).key for m in raw.pop("modalities"))
        for name in ("wavelets", "welch_segment_s"):
            if name in raw:
                kw[name] = {**getattr(base, name), **raw.pop(name)}
        if "bands" in raw:
            bands = dict(base.bands)
            for key, table in raw.pop("bands").items():
                bands[key] = tuple((str(b[0]), float(b[1]), float(b[2])) for b in table)
            kw["bands"] = bands
        return cls(**kw, **raw)

    def to_dict(self) -> dict:
        return {
            "modalities": list(self.modalities),
            "wavelets": dict(self.wavelets),
            "welch_segment_s": dict(self.welch_segment_s),
            "welch_overlap": self.welch_overlap,
            "k_max": self.k_max,
            "bands": {k: [list(b) for b in v] for k, v in self.bands.items()},
        }

    def per_channel_details(self, modality: str) -> list[tuple[str, str]]:
        return (
            [("Statistical", d) for d in STATISTICAL]
            + [("Slope", d) for d in SLOPE]
            + [("Hjorth", d) for d in HJORTH]
            + [("Wavelet", d) for d in WAVELET]
            + [("PSD", b[0]) for b in self.bands[modality]]
        )

    def welch_config(self, modality: str, fs: float, epoch_samples: int) -> WelchConfig:
        seg = int(round(self.welch_segment_s[modality] * fs))
        return WelchConfig(min(seg, epoch_samples), self.welch_overlap)


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    descriptors: tuple[FeatureDescriptor, ...]
    labels: np.ndarray
    groups: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def columns(self, **match) -> np.ndarray:
        """Indices of columns whose descriptor fields equal ``match``."""
        return np.array(
            [i for i, d in enumerate(self.descriptors) if all(getattr(d, k) == v for k, v in match.items())],
            dtype=np.int64,
        )


def descriptors_for(channel_names: Mapping[str, Sequence[str]], cfg: FeatureConfig) -> list[FeatureDescriptor]:
    out = []
    for key in cfg.modalities:
        mod = get_modality(key)
        for ch in channel_names[key]:
            out += [FeatureDescriptor(mod.name, ch, fam, det) for fam, det in cfg.per_channel_details(key)]
    return out


def channel_features(epochs, fs: float, modality: str, cfg: FeatureConfig, offsets=None) -> np.ndarray:
    """Features for every epoch and channel: ``[..., samples] -> [..., n_features]``.

    ``offsets`` are the per-channel means removed by centering; the coefficient
    of variation is taken relative to the un-centered mean.
    """
    y = np.asarray(epochs, dtype=np.float64)
    ref_mean = y.mean(axis=-1) + (0.0 if offsets is None else np.asarray(offsets))
    cols = list(statistical_features(y, mean=ref_mean))
    cols += list(slope_features(y, fs))
    cols.append(higuchi_fd(y, cfg.k_max))
    cols += list(hjorth(y, fs))
    cols += list(wavelet_features(dwt_level1(y, cfg.wavelets[modality])))
    spec = welch_psd(y, fs, cfg.welch_config(modality, fs, y.shape[-1]))
    cols += [band_power(spec, b) for b in cfg.bands[modality]]
    return np.stack(cols, axis=-1)


def _locate_failure(es: EpochSet, rows: int, cfg: FeatureConfig) -> FeatureComputationFailed:
    for e in range(rows):
        for c, ch in enumerate(es.channel_names):
            try:
                channel_features(es.epochs[e, c], es.fs, es.modality.key, cfg, es.offsets[e, c])
            except HDSignalsError as exc:
                return FeatureComputationFailed(
                    f"patient {es.patient_id}, {es.modality.name} epoch {es.kept_indices[e]}, "
                    f"channel {ch}: {type(exc).__name__}: {exc}"
                )
    return FeatureComputationFailed(f"patient {es.patient_id}, {es.modality.name}: feature computation failed")


def epochset_features(es: EpochSet, cfg: FeatureConfig, rows: int | None = None) -> np.ndarray:
    """``[rows x (channels * per_channel)]`` features for the first ``rows`` epochs."""
    rows = es.n_epochs if rows is None else rows
    key = es.modality.key
    try:
        block = channel_features(es.epochs[:rows], es.fs, key, cfg, es.offsets[:rows])
    except HDSignalsError:
        raise _locate_failure(es, rows, cfg) from None
    if not np.isfinite(block).all():
        e, c, _ = np.argwhere(~np.isfinite(block))[0]
        raise FeatureComputationFailed(
            f"patient {es.patient_id}, {es.modality.name} epoch {es.kept_indices[e]}, "
            f"channel {es.channel_names[c]}: non-finite feature value"
        )
    return block.reshape(rows, -1)


def patient_features(sets: Mapping[str, EpochSet], patient_id: str, cfg: FeatureConfig) -> np.ndarray:
    missing = [m for m in cfg.modalities if m not in sets]
    if missing:
        raise MissingModality(f"patient {patient_id!r} lacks epochs for {missing}")
    # align modalities on the first n surviving epochs of each
    rows = min(sets[m].n_epochs for m in cfg.modalities)
    return np.concatenate([epochset_features(sets[m], cfg, rows) for m in cfg.modalities], axis=1)


def extract_feature_matrix(
    epoch_sets: Mapping[str, Mapping[str, EpochSet]],
    manifest: DatasetManifest,
    cfg: FeatureConfig | None = None,
    threads: int = 1,
) -> FeatureMatrix:
    """Stack per-patient features in manifest order.

    ``epoch_sets`` maps patient id -> modality key -> EpochSet. Rows for one
    patient share its group id and label. Output does not depend on ``threads``.
    """
    cfg = cfg or FeatureConfig()
    pids = [pid for pid in manifest.patient_ids if pid in epoch_sets]
    if not pids:
        raise MissingModality("no patients with epochs to extract")
    for pid in pids:
        missing = [m for m in cfg.modalities if m not in epoch_sets[pid]]
        if missing:
            raise MissingModality(f"patient {pid!r} lacks epochs for {missing}")

    def work(pid):
        return patient_features(epoch_sets[pid], pid, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, pids))
    else:
        blocks = [work(pid) for pid in pids]

    first = epoch_sets[pids[0]]
    names = {m: first[m].channel_names for m in cfg.modalities}
    descriptors = tuple(descriptors_for(names, cfg))
    values = np.concatenate(blocks, axis=0)
    assert values.shape[1] == len(descriptors)
    labels = np.concatenate([np.full(len(b), manifest.label_of(pid), dtype=np.int64) for pid, b in zip(pids, blocks)])
    groups = np.concatenate([np.full(len(b), pid, dtype=object) for pid, b in zip(pids, blocks)])
    return FeatureMatrix(values, descriptors, labels, groups)


# -----------------------------------------------------------------------------
# persistence
# -----------------------------------------------------------------------------
def save_feature_matrix(fm: FeatureMatrix, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_npy(fm.values, directory / "features.npy")
    with open(directory / "descriptors.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "modality", "channel", "family", "detail"])
        for i, d in enumerate(fm.descriptors):
            w.writerow([i, d.modality, d.channel, d.family, d.detail])
    with open(directory / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label"])
        w.writerows(enumerate(fm.labels.tolist()))
    with open(directory / "groups.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "group"])
        w.writerows(enumerate(fm.groups.tolist()))


def load_feature_matrix(directory) -> FeatureMatrix:
    directory = Path(directory)
    values = read_npy(directory / "features.npy")
    with open(directory / "descriptors.csv", newline="", encoding="utf-8") as fh:
        descriptors = tuple(
            FeatureDescriptor(r["modality"], r["channel"], r["family"], r["detail"]) for r in csv.DictReader(fh)
        )
    with open(directory / "labels.csv", newline="", encoding="utf-8") as fh:
        labels = np.array([int(r["label"]) for r in csv.DictReader(fh)], dtype=np.int64)
    with open(directory / "groups.csv", newline="", encoding="utf-8") as fh:
        groups = np.array([r["group"] for r in csv.DictReader(fh)], dtype=object)
    if values.ndim != 2 or values.shape != (len(labels), len(descriptors)) or len(groups) != len(labels):
        raise ValueError(f"{directory}: inconsistent feature artifacts")
    return FeatureMatrix(values, descriptors, labels, groups)
