"""Meta-model layer: feature extraction and the two trainable classifiers.

ClassProbs values are 4-tuples indexed by damage level ordinal, each entry
in [0, 1], summing to 1 within 1e-9.
"""

from .features import FEATURE_DIM, FEATURE_LAYOUT, FEATURE_NAMES, extract_features
from .gbdt import (
    GBDT_FORMAT,
    GbdtModel,
    gbdt_training_accuracy,
    predict_gbdt,
    predict_gbdt_batch,
    train_gbdt,
)
from .hyper import GbdtHyper, LogRegHyper, TrainHyper
from .logreg import (
    LOGREG_FORMAT,
    LogRegModel,
    predict_logreg,
    predict_logreg_batch,
    train_logreg,
    training_accuracy,
)
from .serialize import load_model, model_to_json, save_model

ClassProbs = tuple[float, float, float, float]

__all__ = [
    "FEATURE_DIM",
    "FEATURE_LAYOUT",
    "FEATURE_NAMES",
    "GBDT_FORMAT",
    "LOGREG_FORMAT",
    "ClassProbs",
    "GbdtHyper",
    "GbdtModel",
    "LogRegHyper",
    "LogRegModel",
    "TrainHyper",
    "extract_features",
    "gbdt_training_accuracy",
    "load_model",
    "model_to_json",
    "predict_gbdt",
    "predict_gbdt_batch",
    "predict_logreg",
    "predict_logreg_batch",
    "save_model",
    "train_gbdt",
    "train_logreg",
    "training_accuracy",
]
