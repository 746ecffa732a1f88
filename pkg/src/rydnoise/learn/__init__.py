from .cv import CvReport, cross_validate, fold_blocks, predict_ensemble
from .models import (
    MlpConfig,
    MlpTrainer,
    RegressorModel,
    TargetScaler,
    desk_scale_config,
    fit_linear,
    fit_mlp,
    mean_absolute_error,
    multi_param_config,
    single_param_config,
)
from .network import Adam, DenseNetwork
from .search import SearchSpace, random_search

__all__ = [
    "Adam",
    "CvReport",
    "DenseNetwork",
    "MlpConfig",
    "MlpTrainer",
    "RegressorModel",
    "SearchSpace",
    "TargetScaler",
    "cross_validate",
    "desk_scale_config",
    "fit_linear",
    "fit_mlp",
    "fold_blocks",
    "mean_absolute_error",
    "multi_param_config",
    "predict_ensemble",
    "random_search",
    "single_param_config",
]
