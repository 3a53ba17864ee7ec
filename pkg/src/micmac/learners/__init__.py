"""Learners used as wrappers and final classifiers: KNN, RBF-SVM and random forest."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from micmac.learners.forest import ForestModel, fit_forest
from micmac.learners.knn import KNNModel
from micmac.learners.svm import SVMModel, fit_svm, rbf_kernel, scale_gamma

KINDS = ("knn", "svm", "rf")


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "knn"
    knn_k: int = 3
    svm_c: float = 1.0
    svm_gamma: float | None = None  # None: 1 / (n_features * mean feature variance)
    svm_tol: float = 1e-3
    rf_trees: int = 100
    rf_max_depth: int = 10
    rf_features_per_split: int | None = None  # None: ceil(sqrt(n_features))
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.knn_k < 1 or self.knn_k % 2 == 0:
            raise ValueError("knn_k must be odd and >= 1")
        if self.svm_c <= 0:
            raise ValueError("svm_c must be > 0")
        if self.svm_gamma is not None and self.svm_gamma <= 0:
            raise ValueError("svm_gamma must be > 0")
        if self.svm_tol <= 0:
            raise ValueError("svm_tol must be > 0")
        if self.rf_trees < 1 or self.rf_max_depth < 1:
            raise ValueError("rf_trees and rf_max_depth must be >= 1")

    def with_seed(self, seed: int) -> "LearnerConfig":
        return replace(self, seed=seed)


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("empty feature set")
    if X.shape[0] != len(y):
        raise ValueError("X and y lengths differ")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or Inf")
    if len(np.unique(y)) < 2:
        raise ValueError("single-class input: both labels must be present")
    return X, y


def train(cfg: LearnerConfig, X, y):
    """Fit the learner described by ``cfg``; returns a KNN, SVM or forest model."""
    X, y = _check_xy(X, y)
    if cfg.kind == "knn":
        return KNNModel(np.ascontiguousarray(X), y, cfg.knn_k)
    if cfg.kind == "svm":
        return fit_svm(X, y, cfg.svm_c, cfg.svm_gamma, cfg.svm_tol)
    max_features = cfg.rf_features_per_split or math.ceil(math.sqrt(X.shape[1]))
    return fit_forest(X, y, cfg.rf_trees, cfg.rf_max_depth, max_features, cfg.seed)


def predict(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"dimension mismatch: model has {model.n_features} features, got {X.shape[-1]}")
    return model.predict(X)


def accuracy(model, X, y) -> float:
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    return float(np.count_nonzero(predict(model, X) == y) / len(y))


def rf_importance(model) -> np.ndarray:
    if not isinstance(model, ForestModel):
        raise TypeError("rf_importance requires a random forest model")
    return model.feature_importances()


__all__ = [
    "LearnerConfig",
    "KNNModel",
    "SVMModel",
    "ForestModel",
    "train",
    "predict",
    "accuracy",
    "rf_importance",
    "rbf_kernel",
    "scale_gamma",
]
