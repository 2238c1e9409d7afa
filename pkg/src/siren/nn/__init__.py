"""From-scratch numpy MLP: 68 -> 300 -> 200 -> 100 -> 4 with SELU, dropout and batchnorm."""

from siren.nn.io import load_model, save_model
from siren.nn.metrics import Metrics, evaluate
from siren.nn.model import LayerSpec, ModelParams, Prediction, default_architecture, init_params, predict, predict_proba
from siren.nn.training import EpochRecord, TrainConfig, TrainResult, train

__all__ = [
    "EpochRecord", "LayerSpec", "Metrics", "ModelParams", "Prediction", "TrainConfig", "TrainResult",
    "default_architecture", "evaluate", "init_params", "load_model", "predict", "predict_proba",
    "save_model", "train",
]
