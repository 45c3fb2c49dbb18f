"""Shared model plumbing: input validation and the probability interface."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FeatureCountMismatch, NonFiniteInput, SingleClass


def check_X(X, feature_count: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if feature_count is not None and X.shape[1] != feature_count:
        raise FeatureCountMismatch(f"model expects {feature_count} features, got {X.shape[1]}")
    if not np.isfinite(X).all():
        raise NonFiniteInput("X contains NaN or infinite values")
    return X


def check_Xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = check_X(X)
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise ValueError(f"y must be 1-D with {X.shape[0]} entries, got shape {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("y must be binary (0/1)")
    y = y.astype(np.int64)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    if len(np.unique(y)) < 2:
        raise SingleClass(f"only class {int(y[0])} present in y")
    return X, y


@dataclass
class TrainedModel:
    feature_count: int

    def predict_proba(self, X) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= threshold).astype(np.int64)


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """``[rows x 2]`` class probabilities; column 1 is the ranking score."""
    return model.predict_proba(X)
