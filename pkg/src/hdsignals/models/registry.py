"""Named model families and their default / tuned parameters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discriminant import fit_lda, fit_qda
from .forest import EXTRA_TREES, RANDOM_FOREST, TreeParams, fit_forest
from .linear import fit_logreg

FAMILIES = ("ert", "rf", "logreg", "lda", "qda")

DEFAULT_PARAMS: dict[str, dict] = {
    "ert": {"n_estimators": 100, "max_features": "sqrt", "min_samples_leaf": 1, "max_depth": None},
    "rf": {"n_estimators": 100, "max_features": "sqrt", "min_samples_leaf": 1, "max_depth": None},
    "logreg": {"l2": 1.0, "max_iter": 5000, "tol": 1e-6},
    "lda": {"reg": 1e-4},
    "qda": {"reg": 1e-2},
}

# scaled-out forests
TUNED_PARAMS: dict[str, dict] = {
    "ert": {"n_estimators": 1000},
    "rf": {"n_estimators": 1000},
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model {self.family!r}; expected one of {FAMILIES}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.family])
        if unknown:
            raise ValueError(f"unknown parameters for {self.family}: {sorted(unknown)}")

    @classmethod
    def default(cls, family: str, profile: str = "default", **overrides) -> "ModelSpec":
        if profile not in ("default", "tuned"):
            raise ValueError(f"profile must be 'default' or 'tuned', got {profile!r}")
        params = dict(DEFAULT_PARAMS.get(family, {}))
        if profile == "tuned":
            params.update(TUNED_PARAMS.get(family, {}))
        params.update(overrides)
        return cls(family, params)

    def resolved(self) -> dict:
        return {**DEFAULT_PARAMS[self.family], **self.params}


def fit_model(spec: ModelSpec, X, y, seed: int = 0, threads: int = 1):
    p = spec.resolved()
    if spec.family in ("ert", "rf"):
        mode = EXTRA_TREES if spec.family == "ert" else RANDOM_FOREST
        return fit_forest(X, y, TreeParams(mode=mode, seed=int(seed), **p), threads=threads)
    if spec.family == "logreg":
        return fit_logreg(X, y, **p)
    if spec.family == "lda":
        return fit_lda(X, y, **p)
    return fit_qda(X, y, **p)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for (seed, keys...), e.g. one per CV fold."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint32)[0])
