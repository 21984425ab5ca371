from .estimator import LinkClassifier
from .model import (ForwardTrace, LinkerParams, backward, forward, init_params,
                    loss)
from .samples import (InsufficientGroundTruth, LinkSample, TrainConfig,
                      generate_samples)
from .serial import WeightsFormatError, load_params, save_params
from .training import TrainingDivergedError, cosine_lr, train
from .windows import PREDECESSOR, SUCCESSOR, Window, make_window

__all__ = [
    "ForwardTrace", "InsufficientGroundTruth", "LinkClassifier", "LinkSample",
    "LinkerParams", "PREDECESSOR", "SUCCESSOR", "TrainConfig",
    "TrainingDivergedError", "WeightsFormatError", "Window", "backward",
    "cosine_lr", "forward", "generate_samples", "init_params", "load_params",
    "loss", "make_window", "save_params", "train",
]
