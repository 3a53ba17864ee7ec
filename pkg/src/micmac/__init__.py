"""MICMAC wrapper feature selection and its subject-based evaluation pipeline."""

from micmac.dataset import Dataset, Scaler, load_dataset, save_dataset, fit_scaler, apply_scaler, cosine_redundancy
from micmac.learners import LearnerConfig, train, predict, accuracy, rf_importance
from micmac.selectors import (
    SelectorConfig,
    SelectionTrace,
    preselect_rf,
    merit,
    micmac_select,
    mrmr_select,
    mdrmr_select,
    mutual_information,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Scaler",
    "load_dataset",
    "save_dataset",
    "fit_scaler",
    "apply_scaler",
    "cosine_redundancy",
    "LearnerConfig",
    "train",
    "predict",
    "accuracy",
    "rf_importance",
    "SelectorConfig",
    "SelectionTrace",
    "preselect_rf",
    "merit",
    "micmac_select",
    "mrmr_select",
    "mdrmr_select",
    "mutual_information",
]
