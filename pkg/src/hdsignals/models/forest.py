"""Random Forest and Extremely Randomized Trees built on the numba tree kernel."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import NotAForest
from ._tree import build_tree, predict_forest
from .base import TrainedModel, check_X, check_Xy

RANDOM_FOREST = "RandomForest"
EXTRA_TREES = "ExtraTrees"


@dataclass(frozen=True)
class TreeParams:
    n_estimators: int = 100
    max_features: str | float = "sqrt"
    min_samples_leaf: int = 1
    max_depth: int | None = None
    mode: str = EXTRA_TREES
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.mode not in (RANDOM_FOREST, EXTRA_TREES):
            raise ValueError(f"mode must be {RANDOM_FOREST!r} or {EXTRA_TREES!r}, got {self.mode!r}")
        if isinstance(self.max_features, str):
            if self.max_features not in ("sqrt", "all"):
                raise ValueError(f"max_features must be 'sqrt', 'all' or a fraction, got {self.max_features!r}")
        elif not 0 < float(self.max_features) <= 1:
            raise ValueError(f"max_features fraction must lie in (0, 1], got {self.max_features}")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")

    def n_candidates(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        if self.max_features == "all":
            return n_features
        return max(1, int(float(self.max_features) * n_features))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # [nodes x 2] weighted class counts

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def tree_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return [np.random.SeedSequence([int(seed), t]) for t in range(n)]


def _fit_one(XT, y, params: TreeParams, mtry: int, ss: np.random.SeedSequence):
    n = y.shape[0]
    rng = np.random.default_rng(ss)
    if params.mode == RANDOM_FOREST:
        w = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
    else:
        w = np.ones(n)
    rows = np.flatnonzero(w > 0).astype(np.int64)
    tree_seed = np.uint64(rng.integers(1, 2**63 - 1))
    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    feature, threshold, left, right, counts, imp = build_tree(
        XT, y, w, rows, mtry, float(params.min_samples_leaf), max_depth, params.mode == EXTRA_TREES, tree_seed
    )
    return Tree(feature, threshold, left, right, counts), imp


@dataclass
class ForestModel(TrainedModel):
    params: TreeParams = field(default_factory=TreeParams)
    trees: list = field(default_factory=list)
    tree_importances: np.ndarray | None = None  # [n_trees x n_features], per-tree normalized
    kind: str = "forest"
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    def _pack(self):
        if self._packed is None:
            offsets = np.cumsum([0] + [t.n_nodes for t in self.trees])
            feature = np.concatenate([t.feature for t in self.trees])
            threshold = np.concatenate([t.threshold for t in self.trees])
            left = np.concatenate([np.where(t.left >= 0, t.left + o, -1) for t, o in zip(self.trees, offsets)])
            right = np.concatenate([np.where(t.right >= 0, t.right + o, -1) for t, o in zip(self.trees, offsets)])
            counts = np.concatenate([t.counts for t in self.trees])
            tot = counts.sum(axis=1)
            leaf_p1 = np.divide(counts[:, 1], tot, out=np.zeros_like(tot), where=tot > 0)
            self._packed = (feature, threshold, left, right, leaf_p1, offsets[:-1].astype(np.int64))
        return self._packed

    def predict_proba(self, X) -> np.ndarray:
        X = check_X(X, self.feature_count)
        p1 = predict_forest(X, *self._pack())
        return np.column_stack([1.0 - p1, p1])


def fit_forest(X, y, params: TreeParams | None = None, threads: int = 1) -> ForestModel:
    """Fit a Random Forest (bootstrap rows, exhaustive thresholds) or an
    Extremely Randomized Trees ensemble (all rows, one random threshold per
    candidate feature). Gini impurity in both modes."""
    params = params or TreeParams()
    X, y = check_Xy(X, y)
    XT = np.ascontiguousarray(X.T)
    mtry = params.n_candidates(X.shape[1])
    seeds = tree_seeds(params.seed, params.n_estimators)

    def work(ss):
        return _fit_one(XT, y, params, mtry, ss)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, seeds))
    else:
        results = [work(ss) for ss in seeds]

    trees = [t for t, _ in results]
    raw = np.array([imp for _, imp in results])
    sums = raw.sum(axis=1, keepdims=True)
    per_tree = np.divide(raw, sums, out=np.zeros_like(raw), where=sums > 0)
    kind = "rf" if params.mode == RANDOM_FOREST else "ert"
    return ForestModel(feature_count=X.shape[1], params=params, trees=trees, tree_importances=per_tree, kind=kind)


def feature_importances(model) -> tuple[np.ndarray, np.ndarray]:
    """Mean decrease in Gini impurity (normalized to sum 1) and its per-tree SD.

    Divide the SD by ``sqrt(n_estimators)`` for a standard error.
    """
    if not isinstance(model, ForestModel):
        raise NotAForest(f"feature importances need a tree ensemble, got {type(model).__name__}")
    per_tree = model.tree_importances
    mean = per_tree.mean(axis=0)
    total = mean.sum()
    if total > 0:
        mean = mean / total
    return mean, per_tree.std(axis=0)
