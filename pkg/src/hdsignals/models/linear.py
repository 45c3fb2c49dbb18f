"""L2-regularized logistic regression fit by gradient descent."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DidNotConverge
from .base import TrainedModel, check_X, check_Xy


def _log1pexp(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def standardize_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def objective(theta, Z, y, l2):
    """Mean negative log-likelihood plus ``l2 / (2n) * ||w||^2``; ``theta = [b, w]``."""
    n = len(y)
    z = theta[0] + Z @ theta[1:]
    w = theta[1:]
    return np.mean(_log1pexp(z) - y * z) + 0.5 * l2 / n * (w @ w)


def gradient(theta, Z, y, l2):
    n = len(y)
    r = _sigmoid(theta[0] + Z @ theta[1:]) - y
    g = np.empty_like(theta)
    g[0] = r.mean()
    g[1:] = Z.T @ r / n + l2 / n * theta[1:]
    return g


@dataclass
class LogisticModel(TrainedModel):
    coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    intercept: float = 0.0
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    l2: float = 1.0
    n_iter: int = 0
    converged: bool = True
    kind: str = "logreg"

    def decision_function(self, X) -> np.ndarray:
        X = check_X(X, self.feature_count)
        return X @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        p1 = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def standardized_params(self) -> np.ndarray:
        """``[b, w]`` in the internal standardized coordinates."""
        mean = np.zeros(self.feature_count) if self.mean is None else self.mean
        scale = np.ones(self.feature_count) if self.scale is None else self.scale
        w = self.coef * scale
        return np.concatenate([[self.intercept + self.coef @ mean], w])


def fit_logreg(X, y, l2: float = 1.0, max_iter: int = 5000, tol: float = 1e-6) -> LogisticModel:
    """Gradient descent with Armijo backtracking on standardized features.

    Stops when the max-norm of the gradient drops below ``tol``; reaching
    ``max_iter`` first emits :class:`DidNotConverge` and marks the model.
    The standardization is folded back into ``coef``/``intercept``.
    """
    X, y = check_Xy(X, y)
    y = y.astype(np.float64)
    mean, scale = standardize_stats(X)
    Z = (X - mean) / scale
    theta = np.zeros(X.shape[1] + 1)
    f = objective(theta, Z, y, l2)
    g = gradient(theta, Z, y, l2)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) < tol:
            converged = True
            it -= 1
            break
        gg = g @ g
        step *= 2.0
        while True:
            cand = theta - step * g
            f_new = objective(cand, Z, y, l2)
            if f_new <= f - 0.5 * step * gg or step < 1e-20:
                break
            step *= 0.5
        theta, f = cand, f_new
        g = gradient(theta, Z, y, l2)
    else:
        converged = np.max(np.abs(g)) < tol
    if not converged:
        warnings.warn(
            f"logistic regression stopped after {max_iter} iterations with gradient max-norm "
            f"{np.max(np.abs(g)):.3g} >= tol {tol:g}",
            DidNotConverge,
            stacklevel=2,
        )
    coef = theta[1:] / scale
    intercept = float(theta[0] - coef @ mean)
    return LogisticModel(
        feature_count=X.shape[1],
        coef=coef,
        intercept=intercept,
        mean=mean,
        scale=scale,
        l2=float(l2),
        n_iter=it,
        converged=bool(converged),
    )
