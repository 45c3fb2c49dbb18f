from .fractal import higuchi_fd
from .matrix import (
    FeatureConfig,
    FeatureDescriptor,
    FeatureMatrix,
    channel_features,
    descriptors_for,
    extract_feature_matrix,
    load_feature_matrix,
    save_feature_matrix,
)
from .spectral import ECG_BANDS, EEG_BANDS, FNIRS_BANDS, Spectrum, WelchConfig, band_power, welch_psd
from .timedomain import hjorth, slope_features, statistical_features
from .wavelet import WaveletCoeffs, dwt_level1, wavelet_features

__all__ = [
    "ECG_BANDS",
    "EEG_BANDS",
    "FNIRS_BANDS",
    "FeatureConfig",
    "FeatureDescriptor",
    "FeatureMatrix",
    "Spectrum",
    "WaveletCoeffs",
    "WelchConfig",
    "band_power",
    "channel_features",
    "descriptors_for",
    "dwt_level1",
    "extract_feature_matrix",
    "higuchi_fd",
    "hjorth",
    "load_feature_matrix",
    "save_feature_matrix",
    "slope_features",
    "statistical_features",
    "wavelet_features",
]
