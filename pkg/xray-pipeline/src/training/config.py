from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field

from src.config import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_EPSILON,
    DEFAULT_LEARNING_RATE,
    REFERENCE_RUNS,
)
from src.utils.errors import ConfigurationError, validate_record


class TrainConfig(BaseModel):
    """Mini-batch Adam schedule."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(..., ge=1, description="Passes over the training set")
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1, description="Samples per optimizer step")
    learning_rate: float = Field(default=DEFAULT_LEARNING_RATE, gt=0)
    beta1: float = Field(default=DEFAULT_BETA1, gt=0, lt=1)
    beta2: float = Field(default=DEFAULT_BETA2, gt=0, lt=1)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0)
    seed: int = Field(default=0, ge=0, lt=2**64, description="Shuffle seed")


def preset(name: str) -> Dict[str, Any]:
    """Architecture, class count and schedule of a published reference run."""
    try:
        return dict(REFERENCE_RUNS[name])
    except KeyError:
        known = ", ".join(sorted(REFERENCE_RUNS))
        raise ConfigurationError(f"Unknown preset '{name}' (known: {known})") from None


def train_config_from(values: Dict[str, Any]) -> TrainConfig:
    """Build a TrainConfig from a loose mapping, ignoring unset (None) entries."""
    fields = {k: v for k, v in values.items() if k in TrainConfig.model_fields and v is not None}
    return validate_record(TrainConfig, fields)
