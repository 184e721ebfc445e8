"""From-scratch FFNN and LSTM regressors with Adam training and trajectory prediction."""

from .ffnn import FfnnModel
from .lstm import LstmModel
from .predict import (
    ModelBundle,
    PredictionResult,
    bundle_from_dict,
    bundle_to_dict,
    load_bundle,
    predict_series,
    predict_target,
    save_bundle,
    time_grid,
)
from .training import (
    Adam,
    EpochRecord,
    Model,
    TrainReport,
    TrainingDiverged,
    gradients,
    init,
    model_digest,
    predict_batched,
    train,
)

__all__ = [
    "Adam",
    "EpochRecord",
    "FfnnModel",
    "LstmModel",
    "Model",
    "ModelBundle",
    "PredictionResult",
    "TrainReport",
    "TrainingDiverged",
    "bundle_from_dict",
    "bundle_to_dict",
    "gradients",
    "init",
    "load_bundle",
    "model_digest",
    "predict_batched",
    "predict_series",
    "predict_target",
    "save_bundle",
    "time_grid",
    "train",
]
