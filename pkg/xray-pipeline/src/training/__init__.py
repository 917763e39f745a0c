from src.training.config import TrainConfig, preset, train_config_from
from src.training.optimizer import AdamState, adam_step
from src.training.trainer import (
    BatchPrefetcher,
    TrainLogRecord,
    evaluate_accuracy,
    read_train_log,
    train,
)

__all__ = [
    "TrainConfig",
    "preset",
    "train_config_from",
    "AdamState",
    "adam_step",
    "BatchPrefetcher",
    "TrainLogRecord",
    "evaluate_accuracy",
    "read_train_log",
    "train",
]
