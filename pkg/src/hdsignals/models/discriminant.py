"""Gaussian linear and quadratic discriminant analysis.

Features are standardized internally (affine-invariant for the unregularized
rules) so that the trace-scaled ridge treats every column alike.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ClassTooSmall, SingularCovariance
from .base import TrainedModel, check_X, check_Xy
from .linear import standardize_stats

RCOND = 1e-10


def _shrink(cov: np.ndarray, reg: float) -> np.ndarray:
    p = cov.shape[0]
    return cov + reg * (np.trace(cov) / p) * np.eye(p)


def _checked_cholesky(cov: np.ndarray, what: str) -> np.ndarray:
    eig = np.linalg.eigvalsh(cov)
    if eig[-1] <= 0 or eig[0] <= RCOND * eig[-1]:
        raise SingularCovariance(
            f"{what} covariance is singular (eigenvalue ratio {eig[0] / eig[-1] if eig[-1] > 0 else 0:.3g}); "
            "increase reg"
        )
    return np.linalg.cholesky(cov)


def _class_stats(Z, y):
    counts = np.bincount(y, minlength=2)
    if counts.min() < 2:
        raise ClassTooSmall(f"each class needs >= 2 samples, got counts {counts.tolist()}")
    means = np.stack([Z[y == c].mean(axis=0) for c in (0, 1)])
    priors = counts / counts.sum()
    return counts, means, priors


def _softmax2(scores: np.ndarray) -> np.ndarray:
    scores = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(axis=1, keepdims=True)


def _mahalanobis(chol, d):
    sol = np.linalg.solve(chol, d.T)
    return np.sum(sol**2, axis=0)


@dataclass
class DiscriminantModel(TrainedModel):
    kind: str = "lda"
    center: np.ndarray | None = None
    scale: np.ndarray | None = None
    means: np.ndarray | None = None  # [2 x p] in standardized units
    priors: np.ndarray | None = None
    covariances: np.ndarray | None = None  # [p x p] pooled (lda) or [2 x p x p] (qda)
    reg: float = 0.0
    _chol: list = field(default_factory=list, repr=False, compare=False)

    def _factors(self):
        if not self._chol:
            covs = [self.covariances] if self.kind == "lda" else list(self.covariances)
            self._chol = [np.linalg.cholesky(c) for c in covs]
        return self._chol

    def log_scores(self, X) -> np.ndarray:
        X = check_X(X, self.feature_count)
        Z = (X - self.center) / self.scale
        chol = self._factors()
        scores = np.empty((len(Z), 2))
        for c in (0, 1):
            L = chol[0] if self.kind == "lda" else chol[c]
            quad = _mahalanobis(L, Z - self.means[c])
            logdet = 0.0 if self.kind == "lda" else 2.0 * np.sum(np.log(np.diag(L)))
            scores[:, c] = -0.5 * quad - 0.5 * logdet + np.log(self.priors[c])
        return scores

    def predict_proba(self, X) -> np.ndarray:
        return _softmax2(self.log_scores(X))


def fit_lda(X, y, reg: float = 0.0) -> DiscriminantModel:
    """Pooled-covariance Gaussian discriminant with empirical priors."""
    X, y = check_Xy(X, y)
    center, scale = standardize_stats(X)
    Z = (X - center) / scale
    counts, means, priors = _class_stats(Z, y)
    resid = Z - means[y]
    cov = _shrink(resid.T @ resid / (len(Z) - 2), reg)
    chol = _checked_cholesky(cov, "pooled")
    return DiscriminantModel(
        feature_count=X.shape[1], kind="lda", center=center, scale=scale,
        means=means, priors=priors, covariances=cov, reg=float(reg), _chol=[chol],
    )


def fit_qda(X, y, reg: float = 0.0) -> DiscriminantModel:
    """Per-class-covariance Gaussian discriminant; ``reg`` adds a trace-scaled ridge."""
    X, y = check_Xy(X, y)
    center, scale = standardize_stats(X)
    Z = (X - center) / scale
    counts, means, priors = _class_stats(Z, y)
    covs, chols = [], []
    for c in (0, 1):
        d = Z[y == c] - means[c]
        cov = _shrink(d.T @ d / (counts[c] - 1), reg)
        chols.append(_checked_cholesky(cov, f"class {c}"))
        covs.append(cov)
    return DiscriminantModel(
        feature_count=X.shape[1], kind="qda", center=center, scale=scale,
        means=means, priors=priors, covariances=np.stack(covs), reg=float(reg), _chol=chols,
    )
