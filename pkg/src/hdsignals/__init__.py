"""Huntington's disease classification from EEG, ECG and fNIRS recordings."""

__version__ = "0.1.0"
