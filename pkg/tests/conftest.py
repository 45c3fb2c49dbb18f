import numpy as np
import pytest

from hdsignals.signal_io import ECG, EEG, FNIRS, Recording


def make_recording(modality, samples, patient_id="P1"):
    return Recording(patient_id, modality, modality.default_channel_names, np.asarray(samples, dtype=np.float64))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def eeg_noise(rng):
    return make_recording(EEG, 20e-6 * rng.standard_normal((16, 20_000)))


@pytest.fixture
def ecg_noise(rng):
    return make_recording(ECG, 1e-4 * rng.standard_normal((1, 24_000)))


@pytest.fixture
def fnirs_noise(rng):
    return make_recording(FNIRS, 1e-2 * rng.standard_normal((22, 625)))


# -- acceptance summary --------------------------------------------------------
_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(criterion: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
