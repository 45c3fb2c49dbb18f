"""Recordings, NPY tensors and the dataset manifest.

CSV recordings are laid out with one row per time sample and one column per
channel, preceded by a mandatory header of channel names. NPY recordings are
``[channels x time]`` arrays.
"""
from __future__ import annotations

import ast
import csv
import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    BadMagic,
    DuplicatePatient,
    HeaderParse,
    MissingFile,
    MissingModalityPath,
    NonFiniteSample,
    ShapeMismatch,
    UnknownChannel,
    UnknownDiagnosis,
    UnsupportedDtype,
)

EEG_CHANNELS = (
    "C3", "C4", "Cz", "F3", "F4", "Fp1", "Fp2", "O1",
    "O2", "P3", "P4", "P7", "P8", "Pz", "T7", "T8",
)
ECG_CHANNELS = ("ECG",)
FNIRS_CHANNELS = tuple(
    f"N{i}_{kind}" for i in range(1, 12) for kind in ("oxy", "deoxy")
)


class ModalityKind(str, enum.Enum):
    EEG = "EEG"
    ECG = "ECG"
    FNIRS = "FNIRS"


@dataclass(frozen=True)
class Modality:
    kind: ModalityKind
    expected_channels: int
    sampling_rate_hz: float

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def key(self) -> str:
        """Lower-case key used in manifests, configs and file names."""
        return self.kind.value.lower()

    @property
    def default_channel_names(self) -> tuple[str, ...]:
        return _DEFAULT_NAMES[self.kind]


EEG = Modality(ModalityKind.EEG, 16, 1000.0)
ECG = Modality(ModalityKind.ECG, 1, 1200.0)
FNIRS = Modality(ModalityKind.FNIRS, 22, 31.25)

MODALITIES: dict[str, Modality] = {m.key: m for m in (EEG, ECG, FNIRS)}

_DEFAULT_NAMES = {
    ModalityKind.EEG: EEG_CHANNELS,
    ModalityKind.ECG: ECG_CHANNELS,
    ModalityKind.FNIRS: FNIRS_CHANNELS,
}


def get_modality(name: str | Modality) -> Modality:
    if isinstance(name, Modality):
        return name
    try:
        return MODALITIES[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown modality {name!r}; expected one of {sorted(MODALITIES)}") from None


@dataclass(frozen=True)
class Recording:
    patient_id: str
    modality: Modality
    channel_names: tuple[str, ...]
    samples: np.ndarray  # [channels x time]

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ShapeMismatch(f"samples must be 2-D [channels x time], got shape {samples.shape}")
        if samples.shape[0] != self.modality.expected_channels:
            raise ShapeMismatch(
                f"{self.modality.name} expects {self.modality.expected_channels} channels, "
                f"got {samples.shape[0]}"
            )
        if len(self.channel_names) != samples.shape[0]:
            raise ShapeMismatch(
                f"{len(self.channel_names)} channel names for {samples.shape[0]} channels"
            )
        if not np.isfinite(samples).all():
            bad = np.argwhere(~np.isfinite(samples))[0]
            raise NonFiniteSample(
                f"{self.patient_id}/{self.modality.name}: non-finite value at "
                f"channel {bad[0]}, sample {bad[1]}"
            )
        if self.modality.kind is ModalityKind.EEG:
            unknown = sorted(set(self.channel_names) - set(EEG_CHANNELS))
            if unknown:
                raise UnknownChannel(f"unknown EEG channel names {unknown}")
        samples = np.ascontiguousarray(samples)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def fs(self) -> float:
        return self.modality.sampling_rate_hz

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.modality.sampling_rate_hz

    def with_samples(self, samples: np.ndarray) -> "Recording":
        return Recording(self.patient_id, self.modality, self.channel_names, samples)


# -----------------------------------------------------------------------------
# NPY codec
# -----------------------------------------------------------------------------
_MAGIC = b"\x93NUMPY"
_ACCEPTED = {"f8": np.float64, "f4": np.float32}


def _parse_header(text: str) -> tuple[np.dtype, bool, tuple[int, ...]]:
    try:
        header = ast.literal_eval(text)
    except (ValueError, SyntaxError) as exc:
        raise HeaderParse(f"cannot parse NPY header {text!r}") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise HeaderParse(f"NPY header must have keys descr/fortran_order/shape, got {header!r}")
    descr, fortran, shape = header["descr"], header["fortran_order"], header["shape"]
    if not isinstance(descr, str):
        raise UnsupportedDtype(f"structured dtype {descr!r} is not supported")
    if not isinstance(fortran, bool):
        raise HeaderParse(f"fortran_order must be a bool, got {fortran!r}")
    if not isinstance(shape, tuple) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise HeaderParse(f"bad shape {shape!r}")
    order, code = descr[:1], descr[1:]
    if order not in "<>=|" or code not in _ACCEPTED:
        raise UnsupportedDtype(f"only 8-byte and 4-byte floats are supported, got {descr!r}")
    dtype = np.dtype(descr)
    return dtype, fortran, shape


def read_npy(path) -> np.ndarray:
    """Read an NPY v1/v2 file into a C-ordered float64 array.

    4-byte float payloads are widened; big-endian payloads are byte-swapped.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(6)
        if magic != _MAGIC:
            raise BadMagic(f"{path}: not an NPY file (magic {magic!r})")
        version = fh.read(2)
        if len(version) != 2:
            raise HeaderParse(f"{path}: truncated version field")
        major = version[0]
        if major == 1:
            raw_len = fh.read(2)
            fmt = "<H"
        elif major == 2:
            raw_len = fh.read(4)
            fmt = "<I"
        else:
            raise HeaderParse(f"{path}: unsupported NPY version {major}.{version[1]}")
        if len(raw_len) != struct.calcsize(fmt):
            raise HeaderParse(f"{path}: truncated header length")
        (header_len,) = struct.unpack(fmt, raw_len)
        raw_header = fh.read(header_len)
        if len(raw_header) != header_len:
            raise HeaderParse(f"{path}: truncated header")
        dtype, fortran, shape = _parse_header(raw_header.decode("latin1"))
        count = int(np.prod(shape, dtype=np.int64))
        payload = fh.read(count * dtype.itemsize)
    if len(payload) != count * dtype.itemsize:
        raise HeaderParse(f"{path}: payload has {len(payload)} bytes, expected {count * dtype.itemsize}")
    flat = np.frombuffer(payload, dtype=dtype, count=count)
    arr = flat.reshape(shape, order="F" if fortran else "C")
    # astype rather than ascontiguousarray, which would turn 0-d into 1-d
    return arr.astype(np.float64, order="C")


def write_npy(tensor, path, dtype: str = "<f8") -> None:
    """Write ``tensor`` as a little-endian, C-ordered NPY file (``<f8`` or ``<f4``)."""
    if dtype not in ("<f8", "<f4"):
        raise UnsupportedDtype(f"can only write <f8 or <f4, not {dtype!r}")
    arr = np.asarray(tensor).astype(dtype, order="C")
    if not np.isfinite(arr).all():
        raise NonFiniteSample(f"refusing to write non-finite values to {path}")
    shape = tuple(int(d) for d in arr.shape)
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %r, }" % (dtype, shape)
    # header block (magic + version + length + dict + newline) padded to 64 bytes
    for major, len_fmt in ((1, "<H"), (2, "<I")):
        prefix = 6 + 2 + struct.calcsize(len_fmt)
        total = prefix + len(header) + 1
        padded = header + " " * (-total % 64) + "\n"
        if major == 2 or len(padded) < 2**16:
            break
    with open(path, "wb") as fh:
        fh.write(_MAGIC + bytes([major, 0]))
        fh.write(struct.pack(len_fmt, len(padded)))
        fh.write(padded.encode("latin1"))
        fh.write(arr.tobytes(order="C"))


# -----------------------------------------------------------------------------
# recordings
# -----------------------------------------------------------------------------
def _sniff_format(path: Path) -> str:
    with open(path, "rb") as fh:
        head = fh.read(6)
    return "NPY" if head == _MAGIC else "CSV"


def load_recording(path, modality, format: str | None = None, patient_id: str = "") -> Recording:
    """Load one modality's recording from CSV or NPY.

    ``format`` defaults to the file suffix. A declared format that disagrees
    with the file content raises :class:`HeaderParse`.
    """
    path = Path(path)
    modality = get_modality(modality)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    if format is None:
        format = "NPY" if path.suffix.lower() == ".npy" else "CSV"
    format = format.upper()
    if format not in ("CSV", "NPY"):
        raise ValueError(f"format must be CSV or NPY, got {format!r}")
    actual = _sniff_format(path)
    if actual != format:
        raise HeaderParse(f"{path}: declared {format} but content looks like {actual}")
    patient_id = patient_id or path.stem

    if format == "NPY":
        data = read_npy(path)
        if data.ndim != 2:
            raise ShapeMismatch(f"{path}: expected a 2-D [channels x time] array, got {data.shape}")
        names = modality.default_channel_names
        if data.shape[0] != len(names):
            raise ShapeMismatch(
                f"{path}: {modality.name} expects {modality.expected_channels} channels, got {data.shape[0]}"
            )
        return Recording(patient_id, modality, names, data)

    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise HeaderParse(f"{path}: empty CSV")
    names = tuple(h.strip() for h in header)
    if len(names) != modality.expected_channels:
        raise ShapeMismatch(
            f"{path}: {modality.name} expects {modality.expected_channels} columns, got {len(names)}"
        )
    try:
        body = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2, encoding="utf-8")
    except ValueError as exc:
        raise HeaderParse(f"{path}: {exc}") from exc
    if body.size == 0:
        body = np.zeros((0, len(names)))
    if body.shape[1] != len(names):
        raise ShapeMismatch(f"{path}: rows have {body.shape[1]} fields, header has {len(names)}")
    return Recording(patient_id, modality, names, body.T)


def write_recording_csv(rec: Recording, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(rec.channel_names) + "\n")
        np.savetxt(fh, rec.samples.T, delimiter=",", fmt="%.17g")


def write_recording_npy(rec: Recording, path) -> None:
    write_npy(rec.samples, path)


# -----------------------------------------------------------------------------
# manifest
# -----------------------------------------------------------------------------
class Diagnosis(str, enum.Enum):
    SHD = "SHD"
    PHD = "PHD"
    CONTROL = "Control"
    UNKNOWN = "Unknown"


DEFAULT_LABEL_POLICY: dict[Diagnosis, int] = {
    Diagnosis.SHD: 1,
    Diagnosis.PHD: 1,
    Diagnosis.CONTROL: 0,
    Diagnosis.UNKNOWN: 0,
}


def _diagnosis(value: str) -> Diagnosis:
    try:
        return Diagnosis(value)
    except ValueError:
        raise UnknownDiagnosis(
            f"unknown diagnosis {value!r}; expected one of {[d.value for d in Diagnosis]}"
        ) from None


@dataclass(frozen=True)
class ManifestEntry:
    patient_id: str
    diagnosis: Diagnosis
    paths: Mapping[str, Path]  # modality key -> file


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    label_policy: Mapping[Diagnosis, int] = field(default_factory=lambda: dict(DEFAULT_LABEL_POLICY))

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.patient_id in seen:
                raise DuplicatePatient(f"patient id {e.patient_id!r} appears more than once")
            seen.add(e.patient_id)
            missing = [m for m in MODALITIES if m not in e.paths]
            if missing:
                raise MissingModalityPath(f"patient {e.patient_id!r} has no path for {missing}")

    def label_of(self, patient_id: str) -> int:
        return int(self.label_policy[self.entry(patient_id).diagnosis])

    def entry(self, patient_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.patient_id == patient_id:
                return e
        raise KeyError(patient_id)

    @property
    def patient_ids(self) -> list[str]:
        return [e.patient_id for e in self.entries]

    @property
    def labels(self) -> np.ndarray:
        return np.array([self.label_policy[e.diagnosis] for e in self.entries], dtype=np.int64)

    def to_json(self, base_dir=None) -> dict:
        def rel(p: Path) -> str:
            if base_dir is not None:
                try:
                    return Path(p).relative_to(base_dir).as_posix()
                except ValueError:
                    pass
            return str(p)

        return {
            "patients": [
                {"id": e.patient_id, "diagnosis": e.diagnosis.value, **{m: rel(e.paths[m]) for m in MODALITIES}}
                for e in self.entries
            ],
            "label_policy": {d.value: int(v) for d, v in self.label_policy.items()},
        }


def load_manifest(path) -> DatasetManifest:
    """Read a manifest JSON file; relative signal paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such manifest: {path}")
    raw = json.loads(path.read_text(encoding="utf-8"))
    return manifest_from_dict(raw, base_dir=path.parent)


def manifest_from_dict(raw: dict, base_dir=None) -> DatasetManifest:
    base = Path(base_dir) if base_dir is not None else None
    policy = dict(DEFAULT_LABEL_POLICY)
    for name, label in (raw.get("label_policy") or {}).items():
        if int(label) not in (0, 1):
            raise ValueError(f"label for {name!r} must be 0 or 1, got {label!r}")
        policy[_diagnosis(name)] = int(label)
    entries = []
    for item in raw.get("patients", []):
        pid = str(item["id"])
        paths = {}
        for m in MODALITIES:
            if not item.get(m):
                raise MissingModalityPath(f"patient {pid!r} has no path for {m}")
            p = Path(item[m])
            paths[m] = p if p.is_absolute() or base is None else base / p
        entries.append(ManifestEntry(pid, _diagnosis(item["diagnosis"]), paths))
    return DatasetManifest(tuple(entries), policy)


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    payload = manifest.to_json(base_dir=path.parent)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def diagnosis_counts(manifest: DatasetManifest) -> dict[str, int]:
    counts = {d.value: 0 for d in Diagnosis}
    for e in manifest.entries:
        counts[e.diagnosis.value] += 1
    return counts

