from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import (
    DEFAULT_BASE_CHANNELS,
    DEFAULT_DEPTH,
    DEFAULT_INPUT_CHANNELS,
    DEFAULT_INPUT_SIZE,
)


class ModelConfig(BaseModel):
    """Declarative description of a U-Net / W-Net classifier."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    arch: Literal["unet", "wnet"] = Field(..., description="Network family")
    input_size: int = Field(default=DEFAULT_INPUT_SIZE, ge=1, description="Square input side in pixels")
    input_channels: int = Field(default=DEFAULT_INPUT_CHANNELS, ge=1, description="Image channels (gray-scale = 1)")
    base_channels: int = Field(default=DEFAULT_BASE_CHANNELS, ge=1, description="Channels of the top stage")
    depth: int = Field(default=DEFAULT_DEPTH, ge=0, description="Number of pooling stages per U")
    num_classes: int = Field(default=2, ge=2, description="Classifier outputs")
    u_passes: int = Field(default=1, ge=1, description="Consecutive U structures (default: 1 for unet, 2 for wnet)")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Initialization seed")

    @field_validator("arch", mode="before")
    @classmethod
    def normalize_arch(cls, v):
        return v.strip().lower() if isinstance(v, str) else v

    @model_validator(mode="before")
    @classmethod
    def default_passes(cls, data):
        if isinstance(data, dict) and data.get("u_passes") is None:
            arch = str(data.get("arch", "")).strip().lower()
            data = {**data, "u_passes": 1 if arch == "unet" else 2}
        return data

    @model_validator(mode="after")
    def check_ladder(self) -> "ModelConfig":
        if self.input_size % (2**self.depth) != 0:
            raise ValueError(
                f"input_size {self.input_size} is not divisible by 2^depth = {2**self.depth}"
            )
        if self.arch == "unet" and self.u_passes != 1:
            raise ValueError("unet has exactly one U pass")
        return self

    def level_channels(self, level: int) -> int:
        return self.base_channels * 2**level

    @property
    def bottleneck_channels(self) -> int:
        # The upsampled bottleneck must match the deepest skip so the first
        # decoder concat doubles the channel count
        return self.level_channels(max(self.depth - 1, 0))

    @property
    def bottleneck_size(self) -> int:
        return self.input_size // 2**self.depth
