"""Compact transformer fine-tuning on canonical harm corpora."""

from harmtrainer.config import FAMILY_LEARNING_RATES, TrainConfig, family_of
from harmtrainer.errors import ConfigError, SchemaError, TrainerError
from harmtrainer.train import TrainResult, macro_f1, train_and_predict

__all__ = [
    "FAMILY_LEARNING_RATES",
    "TrainConfig",
    "family_of",
    "ConfigError",
    "SchemaError",
    "TrainerError",
    "TrainResult",
    "macro_f1",
    "train_and_predict",
]

__version__ = "0.1.0"
