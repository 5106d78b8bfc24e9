"""Feed-forward routing classifier: training, inference, persistence."""

from .grad_check import gradient_check
from .kernels import backend_name
from .model import LabelCodec, MlpModel, Standardizer, fit_standardizer
from .model_io import load_model, save_model
from .train import DEFAULT_HIDDEN_SIZES, TrainConfig, TrainReport, train_mlp

__all__ = [
    "LabelCodec",
    "MlpModel",
    "Standardizer",
    "fit_standardizer",
    "gradient_check",
    "train_mlp",
    "TrainConfig",
    "TrainReport",
    "DEFAULT_HIDDEN_SIZES",
    "save_model",
    "load_model",
    "backend_name",
]
