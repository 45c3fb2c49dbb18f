from .base import TrainedModel, predict_proba
from .discriminant import DiscriminantModel, fit_lda, fit_qda
from .forest import EXTRA_TREES, RANDOM_FOREST, ForestModel, TreeParams, feature_importances, fit_forest
from .linear import LogisticModel, fit_logreg
from .registry import FAMILIES, ModelSpec, derive_seed, fit_model
from .serialize import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "DiscriminantModel",
    "EXTRA_TREES",
    "FAMILIES",
    "ForestModel",
    "LogisticModel",
    "ModelSpec",
    "RANDOM_FOREST",
    "TrainedModel",
    "TreeParams",
    "derive_seed",
    "feature_importances",
    "fit_forest",
    "fit_lda",
    "fit_logreg",
    "fit_model",
    "fit_qda",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict_proba",
    "save_model",
]
