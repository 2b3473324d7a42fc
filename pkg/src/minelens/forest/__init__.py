"""Random forest training, cross-validation and evaluation curves."""

from .evaluation import CvReport, auc, cross_validate, gaussian_kde, roc_curve, stratified_kfold
from .model import (
    ForestModel,
    ForestParams,
    feature_importance,
    has_splits,
    load_model,
    predict_proba,
    predict_proba_matrix,
    thread_count,
    train_forest,
)
from .tree import DecisionTree

__all__ = [
    "CvReport",
    "DecisionTree",
    "ForestModel",
    "ForestParams",
    "auc",
    "cross_validate",
    "feature_importance",
    "gaussian_kde",
    "has_splits",
    "load_model",
    "predict_proba",
    "predict_proba_matrix",
    "roc_curve",
    "stratified_kfold",
    "thread_count",
    "train_forest",
]
