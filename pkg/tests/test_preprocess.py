import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdsignals.errors import AllEpochsRejected, EmptyEpochSet, EpochTooLong, InvalidBand, NonPositiveStep
from hdsignals.preprocess import (
    BandPassSpec,
    EpochSet,
    PreprocessConfig,
    bandpass_filter,
    load_epochset,
    normalize_epochs,
    preprocess_recording,
    reject_bad_epochs,
    save_epochset,
    segment,
)
from hdsignals.signal_io import ECG, EEG, FNIRS

from conftest import make_recording

EEG_BAND = BandPassSpec(0.5, 45.0)


def _ecg(x):
    return make_recording(ECG, np.atleast_2d(x))


def _epochset(epochs):
    epochs = np.asarray(epochs, dtype=float)
    return EpochSet("P", ECG, ("ECG",), epochs, 5.0, 4.0, tuple(range(len(epochs))))


# -- filtering ----------------------------------------------------------------
def _eeg_sine(freq, seconds=10.0):
    t = np.arange(int(seconds * 1000)) / 1000.0
    return make_recording(EEG, np.tile(np.sin(2 * np.pi * freq * t), (16, 1)))


def test_passband_gain_near_one():
    out = bandpass_filter(_eeg_sine(10.0), EEG_BAND).samples[0]
    core = out[2000:-2000]
    amp = np.sqrt(2) * core.std()
    assert 0.95 <= amp <= 1.05


def _rms(x):
    return np.sqrt(np.mean(x**2))


def test_stopband_attenuation():
    rec = _eeg_sine(200.0)
    out = bandpass_filter(rec, EEG_BAND).samples[0]
    assert _rms(out) <= 0.01 * _rms(rec.samples[0])
    # away from the edges the leakage is far below that
    assert _rms(out[2000:-2000]) <= 1e-3 * _rms(rec.samples[0])


def test_zero_in_zero_out():
    rec = make_recording(EEG, np.zeros((16, 5000)))
    assert np.all(bandpass_filter(rec, EEG_BAND).samples == 0)


def test_dc_removed():
    rec = make_recording(EEG, np.full((16, 20000), 3.0))
    assert np.abs(bandpass_filter(rec, EEG_BAND).samples[:, 5000:-5000]).max() < 1e-3


def test_zero_phase():
    rec = _eeg_sine(8.0)
    x = rec.samples[0]
    y = bandpass_filter(rec, EEG_BAND).samples[0]
    core = slice(2000, -2000)
    lags = np.arange(-50, 51)
    xc = [np.dot(x[core], np.roll(y, lag)[core]) for lag in lags]
    assert lags[int(np.argmax(xc))] == 0


def test_filter_linearity(rng):
    a, b = 2.5, -0.7
    x = rng.standard_normal((16, 4000))
    y = rng.standard_normal((16, 4000))
    fx = bandpass_filter(make_recording(EEG, x), EEG_BAND).samples
    fy = bandpass_filter(make_recording(EEG, y), EEG_BAND).samples
    fxy = bandpass_filter(make_recording(EEG, a * x + b * y), EEG_BAND).samples
    np.testing.assert_allclose(fxy, a * fx + b * fy, rtol=1e-9, atol=1e-9 * np.abs(fxy).max())


def test_length_preserved(fnirs_noise):
    out = bandpass_filter(fnirs_noise, BandPassSpec(0.2, 1.5))
    assert out.samples.shape == fnirs_noise.samples.shape


@pytest.mark.parametrize("band", [BandPassSpec(0.5, 500.0), BandPassSpec(10.0, 5.0), BandPassSpec(-1.0, 5.0)])
def test_invalid_band(eeg_noise, band):
    with pytest.raises(InvalidBand):
        bandpass_filter(eeg_noise, band)


def test_modality_bands_feasible():
    cfg = PreprocessConfig()
    for key, mod in (("eeg", EEG), ("ecg", ECG), ("fnirs", FNIRS)):
        cfg.modalities[key].band.validate(mod.sampling_rate_hz)


# -- segmentation -------------------------------------------------------------
def test_segment_ten_seconds():
    es = segment(_ecg(np.arange(12000.0)), 5.0, 1.0)
    assert es.n_epochs == 2
    assert es.epochs[0, 0, 0] == 0.0 and es.epochs[1, 0, 0] == 4 * 1200
    assert es.samples_per_epoch == 6000


def test_segment_twenty_minutes():
    rec = make_recording(FNIRS, np.zeros((22, 37500)))
    assert segment(rec).n_epochs == 299  # floor((1200 - 5) / 4) + 1


def test_segment_too_long():
    with pytest.raises(EpochTooLong):
        segment(_ecg(np.zeros(3 * 1200)))


def test_segment_non_positive_step():
    with pytest.raises(NonPositiveStep):
        segment(_ecg(np.zeros(12000)), 5.0, 5.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(6000, 40000), st.sampled_from([(5.0, 1.0), (2.0, 0.5), (1.0, 0.0), (3.0, 2.5)]))
def test_segment_tiles(n, lengths):
    epoch_len, overlap = lengths
    rec = _ecg(np.arange(float(n)))
    es = segment(rec, epoch_len, overlap)
    starts = es.epochs[:, 0, 0].astype(int)
    assert np.all(np.diff(starts) == int(round((epoch_len - overlap) * 1200)))
    assert es.n_epochs == int(np.floor((n / 1200 - epoch_len) / (epoch_len - overlap) + 1e-9)) + 1


# -- rejection ----------------------------------------------------------------
def test_reject_identity():
    es = _epochset(np.random.default_rng(0).uniform(-1, 1, (4, 1, 50)))
    out = reject_bad_epochs(es, 10.0)
    assert np.array_equal(out.epochs, es.epochs) and out.kept_indices == es.kept_indices


def test_reject_spike():
    epochs = np.random.default_rng(0).uniform(-1, 1, (5, 1, 50))
    epochs[2, 0, 10] = 100.0
    out = reject_bad_epochs(_epochset(epochs), 10.0)
    assert out.kept_indices == (0, 1, 3, 4)
    assert np.array_equal(out.epochs, epochs[[0, 1, 3, 4]])


def test_reject_everything():
    with pytest.raises(AllEpochsRejected):
        reject_bad_epochs(_epochset(np.random.default_rng(0).uniform(-1, 1, (3, 1, 50))), 0.01)


def test_reject_idempotent():
    epochs = np.random.default_rng(1).standard_normal((20, 1, 50))
    once = reject_bad_epochs(_epochset(epochs), 4.5)
    twice = reject_bad_epochs(once, 4.5)
    assert once.kept_indices == twice.kept_indices


# -- normalization ------------------------------------------------------------
def test_normalize_ramp():
    out = normalize_epochs(_epochset([[[1.0, 2.0, 3.0]]]))
    assert out.epochs.tolist() == [[[-1.0, 0.0, 1.0]]]
    assert out.offsets.tolist() == [[2.0]]


def test_normalize_constant():
    assert normalize_epochs(_epochset([[[5.0, 5.0, 5.0]]])).epochs.tolist() == [[[0.0, 0.0, 0.0]]]


def test_normalize_zero_mean_unchanged():
    es = _epochset([[[-1.0, 0.5, 0.5]]])
    np.testing.assert_allclose(normalize_epochs(es).epochs, es.epochs, atol=1e-12)


def test_normalize_empty():
    es = EpochSet("P", ECG, ("ECG",), np.zeros((0, 1, 10)), 5.0, 4.0, ())
    with pytest.raises(EmptyEpochSet):
        normalize_epochs(es)


def test_normalize_idempotent_and_variance_preserving(rng):
    es = _epochset(rng.standard_normal((6, 1, 100)) + 3.0)
    once = normalize_epochs(es)
    twice = normalize_epochs(once)
    np.testing.assert_allclose(once.epochs.mean(axis=2), 0, atol=1e-12)
    np.testing.assert_allclose(twice.epochs, once.epochs, atol=1e-12)
    np.testing.assert_allclose(once.epochs.var(axis=2), es.epochs.var(axis=2), rtol=1e-12)
    np.testing.assert_allclose(once.epochs + once.offsets[:, :, None], es.epochs, atol=1e-12)


# -- pipeline and persistence -------------------------------------------------
def test_preprocess_recording(eeg_noise):
    es = preprocess_recording(eeg_noise, PreprocessConfig())
    assert es.n_epochs == 4  # 20 s -> starts 0, 4, 8, 12 s
    assert es.epochs.shape == (4, 16, 5000)
    np.testing.assert_allclose(es.epochs.mean(axis=2), 0, atol=1e-9 * np.abs(es.epochs).max())


def test_fnirs_uses_iqr_rule(fnirs_noise):
    x = fnirs_noise.samples.copy()
    x[3, 40] += 5.0  # huge spike 1.3 s in; the filter smears it over a few seconds
    es = preprocess_recording(make_recording(FNIRS, x), PreprocessConfig())
    assert 0 not in es.kept_indices and 3 in es.kept_indices


def test_config_from_dict_overrides():
    cfg = PreprocessConfig.from_dict({"epoch_len_s": 2.0, "modalities": {"eeg": {"ptp_threshold": 1e-3}}})
    assert cfg.epoch_len_s == 2.0
    assert cfg.modalities["eeg"].ptp_threshold == 1e-3
    assert cfg.modalities["eeg"].low_cut_hz == 0.5


def test_epochset_roundtrip(tmp_path, ecg_noise):
    es = preprocess_recording(ecg_noise, PreprocessConfig())
    save_epochset(es, tmp_path)
    back = load_epochset(tmp_path, "ecg")
    assert back.kept_indices == es.kept_indices
    assert np.array_equal(back.epochs, es.epochs) and np.array_equal(back.offsets, es.offsets)
