"""Transformer movement policy, training and checkpoints."""

from .checkpoint import CheckpointError, load, save
from .config import DESK_TRAIN, PRESETS, ConfigError, ModelConfig, TrainConfig, preset
from .policy import MovePolicy, init_params, policy_loss
from .train import EpochMetrics, TrainingError, evaluate_loss, train, write_metrics, write_timing

__all__ = [
    "CheckpointError", "ConfigError", "DESK_TRAIN", "EpochMetrics", "ModelConfig", "MovePolicy", "PRESETS",
    "TrainConfig", "TrainingError", "evaluate_loss", "init_params", "load", "policy_loss", "preset", "save",
    "train", "write_metrics", "write_timing",
]
