"""JSON dump/load for trained models (trees as node tables)."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .discriminant import DiscriminantModel
from .forest import ForestModel, Tree, TreeParams
from .linear import LogisticModel

FORMAT = "hdsignals-model"
VERSION = 1


def _arr(a):
    return None if a is None else np.asarray(a).tolist()


def model_to_dict(model) -> dict:
    head = {"format": FORMAT, "version": VERSION, "kind": model.kind, "feature_count": model.feature_count}
    if isinstance(model, ForestModel):
        return {
            **head,
            "params": model.params.to_dict(),
            "tree_importances": _arr(model.tree_importances),
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "counts": t.counts.tolist(),
                }
                for t in model.trees
            ],
        }
    if isinstance(model, LogisticModel):
        return {
            **head,
            "coef": _arr(model.coef),
            "intercept": model.intercept,
            "mean": _arr(model.mean),
            "scale": _arr(model.scale),
            "l2": model.l2,
            "n_iter": model.n_iter,
            "converged": model.converged,
        }
    if isinstance(model, DiscriminantModel):
        return {
            **head,
            "center": _arr(model.center),
            "scale": _arr(model.scale),
            "means": _arr(model.means),
            "priors": _arr(model.priors),
            "covariances": _arr(model.covariances),
            "reg": model.reg,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    if d.get("format") != FORMAT or d.get("version") != VERSION:
        raise ValueError(f"unsupported model dump (format={d.get('format')!r}, version={d.get('version')!r})")
    kind = d["kind"]
    fc = int(d["feature_count"])
    if kind in ("ert", "rf"):
        trees = [
            Tree(
                np.asarray(t["feature"], dtype=np.int64),
                np.asarray(t["threshold"], dtype=np.float64),
                np.asarray(t["left"], dtype=np.int64),
                np.asarray(t["right"], dtype=np.int64),
                np.asarray(t["counts"], dtype=np.float64).reshape(-1, 2),
            )
            for t in d["trees"]
        ]
        return ForestModel(
            feature_count=fc,
            params=TreeParams(**d["params"]),
            trees=trees,
            tree_importances=np.asarray(d["tree_importances"], dtype=np.float64),
            kind=kind,
        )
    if kind == "logreg":
        opt = lambda k: None if d[k] is None else np.asarray(d[k], dtype=np.float64)  # noqa: E731
        return LogisticModel(
            feature_count=fc, coef=np.asarray(d["coef"], dtype=np.float64), intercept=float(d["intercept"]),
            mean=opt("mean"), scale=opt("scale"), l2=d["l2"], n_iter=d["n_iter"], converged=d["converged"],
        )
    if kind in ("lda", "qda"):
        return DiscriminantModel(
            feature_count=fc, kind=kind,
            **{k: np.asarray(d[k], dtype=np.float64) for k in ("center", "scale", "means", "priors", "covariances")},
            reg=d["reg"],
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
