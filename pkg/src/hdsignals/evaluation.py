"""Group-aware cross-validation, classification metrics and random search."""
from __future__ import annotations

import csv
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyGrid, FoldError, HDSignalsError, LengthMismatch, OneClassOnly, TooFewGroups
from .models import ModelSpec, derive_seed, fit_model

REPORT_SCHEMA_VERSION = 1


# -----------------------------------------------------------------------------
# folds
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    test_groups: tuple[tuple[str, ...], ...]

    @property
    def all_groups(self) -> tuple[str, ...]:
        return tuple(sorted(g for fold in self.test_groups for g in fold))

    def train_groups(self, fold: int) -> tuple[str, ...]:
        held = set(self.test_groups[fold])
        return tuple(g for g in self.all_groups if g not in held)

    def test_mask(self, groups, fold: int) -> np.ndarray:
        return np.isin(_as_str(groups), list(self.test_groups[fold]))


def _as_str(groups) -> np.ndarray:
    return np.asarray([str(g) for g in groups], dtype=object)


def group_kfold_split(groups, k: int = 10, seed: int = 0, labels=None) -> FoldPlan:
    """Deal whole groups to ``k`` folds.

    Group ids are sorted, shuffled by ``seed``, then taken largest-first
    (stable, so equal sizes keep the shuffled order) and each is given to the
    fold with the fewest rows so far.

    With ``labels`` (constant within each group) the positive groups are dealt
    before the negative ones, which spreads each class evenly over the folds.
    Without it, fold class mix varies and pooled out-of-fold scores pick up a
    fold-prevalence offset that drags pooled AUC below 0.5 on null data.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    g = _as_str(groups).astype(str)
    ids, first, inverse, sizes = np.unique(g, return_index=True, return_inverse=True, return_counts=True)
    if len(ids) < k:
        raise TooFewGroups(f"{len(ids)} distinct groups cannot fill {k} folds")
    if labels is None:
        group_class = np.zeros(len(ids), dtype=np.int64)
    else:
        labels = np.asarray(labels)
        if len(labels) != len(g):
            raise LengthMismatch(f"groups and labels lengths differ: {len(g)}, {len(labels)}")
        group_class = labels[first].astype(np.int64)
        if (labels != group_class[inverse]).any():
            raise ValueError("labels must be constant within each group to stratify folds")
    perm = np.random.default_rng(seed).permutation(len(ids))
    ids, sizes, group_class = ids[perm], sizes[perm], group_class[perm]
    totals = np.zeros(k, dtype=np.int64)
    folds: list[list[str]] = [[] for _ in range(k)]
    for cls in sorted(set(group_class.tolist()), reverse=True):
        members = np.flatnonzero(group_class == cls)
        for i in members[np.argsort(-sizes[members], kind="stable")]:
            f = int(np.argmin(totals))
            folds[f].append(str(ids[i]))
            totals[f] += sizes[i]
    return FoldPlan(k, int(seed), tuple(tuple(sorted(f)) for f in folds))


# -----------------------------------------------------------------------------
# metrics
# -----------------------------------------------------------------------------
def _binary_pair(y_true, other) -> tuple[np.ndarray, np.ndarray]:
    y_true = np.asarray(y_true)
    other = np.asarray(other)
    if y_true.shape != other.shape or y_true.ndim != 1:
        raise LengthMismatch(f"lengths differ: {y_true.shape} vs {other.shape}")
    return y_true.astype(np.int64), other


def confusion_matrix(y_true, y_pred) -> np.ndarray:
    """``[[TN, FP], [FN, TP]]``."""
    t, p = _binary_pair(y_true, y_pred)
    p = p.astype(np.int64)
    return np.array(
        [[np.sum((t == 0) & (p == 0)), np.sum((t == 0) & (p == 1))],
         [np.sum((t == 1) & (p == 0)), np.sum((t == 1) & (p == 1))]],
        dtype=np.int64,
    )


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_degenerate: bool = False
    recall_degenerate: bool = False

    def __iter__(self):
        return iter((self.accuracy, self.precision, self.recall, self.f1))


def basic_metrics(y_true, y_pred) -> Metrics:
    """Accuracy, precision, recall, F1; a zero denominator yields 0 and a flag."""
    (tn, fp), (fn, tp) = confusion_matrix(y_true, y_pred)
    n = tn + fp + fn + tp
    acc = (tp + tn) / n if n else 0.0
    prec_deg = tp + fp == 0
    rec_deg = tp + fn == 0
    prec = 0.0 if prec_deg else tp / (tp + fp)
    rec = 0.0 if rec_deg else tp / (tp + fn)
    f1 = 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
    return Metrics(float(acc), float(prec), float(rec), float(f1), bool(prec_deg), bool(rec_deg))


def _check_scores(y_true, scores):
    t, s = _binary_pair(y_true, scores)
    s = s.astype(np.float64)
    n1 = int(np.sum(t == 1))
    n0 = len(t) - n1
    if n1 == 0 or n0 == 0:
        raise OneClassOnly("ROC/PR need both classes in y_true")
    return t, s, n1, n0


def roc_auc(y_true, scores) -> float:
    """P(random positive outranks random negative), ties counted one half."""
    t, s, n1, n0 = _check_scores(y_true, scores)
    ranks = rankdata(s, method="average")
    return float((ranks[t == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def _threshold_counts(t, s):
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    t_sorted = t[order]
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), len(s_sorted) - 1]
    tps = np.cumsum(t_sorted)[last]
    fps = (last + 1) - tps
    return s_sorted[last], tps, fps


def roc_curve(y_true, scores) -> list[tuple[float, float, float]]:
    """``(threshold, fpr, tpr)`` for every distinct score, starting at (inf, 0, 0)."""
    t, s, n1, n0 = _check_scores(y_true, scores)
    thr, tps, fps = _threshold_counts(t, s)
    pts = [(float("inf"), 0.0, 0.0)]
    pts += [(float(a), float(f / n0), float(p / n1)) for a, f, p in zip(thr, fps, tps)]
    return pts


def pr_curve(y_true, scores) -> list[tuple[float, float, float]]:
    """``(threshold, recall, precision)`` for every distinct score, starting at (inf, 0, 1)."""
    t, s, n1, _ = _check_scores(y_true, scores)
    thr, tps, fps = _threshold_counts(t, s)
    pts = [(float("inf"), 0.0, 1.0)]
    pts += [(float(a), float(p / n1), float(p / (p + f))) for a, f, p in zip(thr, fps, tps)]
    return pts


def average_precision(y_true, scores) -> float:
    pts = pr_curve(y_true, scores)
    return float(sum((r - r0) * p for (_, r0, _), (_, r, p) in zip(pts[:-1], pts[1:])))


# -----------------------------------------------------------------------------
# cross-validation
# -----------------------------------------------------------------------------
@dataclass
class EvalReport:
    model: str
    params: dict
    seed: int
    k: int
    stratified: bool
    per_fold: list[dict]
    pooled: dict
    fold_mean: dict
    confusion_matrix: list[list[int]]
    roc_curve: list[tuple[float, float, float]]
    pr_curve: list[tuple[float, float, float]]
    schema_version: int = REPORT_SCHEMA_VERSION
    oof_scores: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("oof_scores")
        d["roc_curve"] = [list(p) for p in self.roc_curve]
        d["pr_curve"] = [list(p) for p in self.pr_curve]
        return d

    def to_json(self) -> str:
        # inf thresholds are written as strings so the document is strict JSON
        def enc(obj):
            if isinstance(obj, float) and not np.isfinite(obj):
                return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
            if isinstance(obj, dict):
                return {k: enc(v) for k, v in obj.items()}
            if isinstance(obj, (list, tuple)):
                return [enc(v) for v in obj]
            return obj

        return json.dumps(enc(self.to_dict()), sort_keys=True, indent=1) + "\n"

    def write(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "report.json").write_text(self.to_json(), encoding="utf-8")
        for name, pts, cols in (
            ("roc.csv", self.roc_curve, ("threshold", "fpr", "tpr")),
            ("pr.csv", self.pr_curve, ("threshold", "recall", "precision")),
        ):
            with open(directory / name, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                w.writerows([[repr(v) for v in p] for p in pts])


def _metric_dict(y, scores, threshold=0.5) -> dict:
    pred = (scores >= threshold).astype(np.int64)
    m = basic_metrics(y, pred)
    d = asdict(m)
    try:
        d["roc_auc"] = roc_auc(y, scores)
        d["pr_auc"] = average_precision(y, scores)
    except OneClassOnly:
        d["roc_auc"] = None
        d["pr_auc"] = None
    return d


def cross_validate(
    spec: ModelSpec,
    X,
    y,
    groups,
    k: int = 10,
    seed: int = 0,
    threads: int = 1,
    stratify: bool = True,
) -> EvalReport:
    """Group k-fold CV. Pooled metrics use the concatenated out-of-fold scores;
    per-fold metrics and their unweighted mean are reported alongside.
    ``stratify`` deals each class separately (see :func:`group_kfold_split`)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    g = _as_str(groups)
    if not (len(X) == len(y) == len(g)):
        raise LengthMismatch(f"X, y and groups lengths differ: {len(X)}, {len(y)}, {len(g)}")
    plan = group_kfold_split(g, k, seed, labels=y if stratify else None)

    def run(fold):
        test = plan.test_mask(g, fold)
        try:
            model = fit_model(spec, X[~test], y[~test], seed=derive_seed(seed, fold))
            return test, model.predict_proba(X[test])[:, 1]
        except HDSignalsError as exc:
            raise FoldError(fold, exc) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(k)))
    else:
        results = [run(f) for f in range(k)]

    oof = np.empty(len(y))
    per_fold = []
    for fold, (test, scores) in enumerate(results):
        oof[test] = scores
        per_fold.append({
            "fold": fold,
            "n_test": int(test.sum()),
            "test_groups": list(plan.test_groups[fold]),
            **_metric_dict(y[test], scores),
        })

    pooled = _metric_dict(y, oof)
    keys = ("accuracy", "precision", "recall", "f1", "roc_auc", "pr_auc")
    fold_mean = {}
    for key in keys:
        vals = [f[key] for f in per_fold if f[key] is not None]
        fold_mean[key] = float(np.mean(vals)) if vals else None
    pred = (oof >= 0.5).astype(np.int64)
    return EvalReport(
        model=spec.family,
        params=spec.resolved(),
        seed=int(seed),
        k=int(k),
        stratified=bool(stratify),
        per_fold=per_fold,
        pooled=pooled,
        fold_mean=fold_mean,
        confusion_matrix=confusion_matrix(y, pred).tolist(),
        roc_curve=roc_curve(y, oof),
        pr_curve=pr_curve(y, oof),
        oof_scores=oof,
    )


# -----------------------------------------------------------------------------
# random search
# -----------------------------------------------------------------------------
@dataclass
class SearchResult:
    best_params: dict
    leaderboard: list[tuple[dict, EvalReport]]


def expand_grid(grid: Mapping[str, Sequence]) -> list[dict]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise EmptyGrid("parameter grid has no combinations")
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def random_search(
    family: str,
    grid: Mapping[str, Sequence],
    n_draws: int,
    X,
    y,
    groups,
    k: int = 10,
    seed: int = 0,
    threads: int = 1,
    stratify: bool = True,
) -> SearchResult:
    """Evaluate up to ``n_draws`` distinct grid points; rank by pooled ROC-AUC."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    combos = expand_grid(grid)
    if n_draws >= len(combos):
        chosen = combos
    else:
        idx = np.random.default_rng(seed).choice(len(combos), size=n_draws, replace=False)
        chosen = [combos[i] for i in idx]
    board = []
    for params in chosen:
        spec = ModelSpec.default(family, **params)
        board.append((params, cross_validate(spec, X, y, groups, k, seed, threads, stratify)))
    board.sort(key=lambda item: -(item[1].pooled["roc_auc"] if item[1].pooled["roc_auc"] is not None else -1))
    return SearchResult(dict(board[0][0]), board)
